from __future__ import annotations

from pathlib import Path

import pytest

from uim import model
from uim.render import TerminalProfile
from uim.repository import RepositorySnapshot

REPO_ROOT = Path(__file__).resolve().parents[1]
SAMPLE_DIR = REPO_ROOT / "sample"
SAMPLE_TABULAR_DIR = REPO_ROOT / "sample_tabular"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

# The three-screen starter document used verbatim across the test suite.
SAMPLE_XML = """\
<uim root="main">
  <screen type="menu" id="main" title="MAIN">
    <item label="Inventory" flow="inv"/>
    <item label="Receiving" menu="recv"/>
  </screen>
  <screen type="menu" id="recv" title="RECEIVING">
    <item label="By PO" flow="inv"/>
  </screen>
  <screen type="input" id="count" title="COUNT">
    <field name="sku" kind="text" required="true" max="20"/>
    <field name="qty" kind="number" required="true" max="6"/>
  </screen>
  <flow id="inv" start="count">
    <on screen="count" outcome="ok" goto="end"/>
  </flow>
</uim>
"""


@pytest.fixture
def sample_doc() -> model.RepositoryDoc:
    return model.parse(SAMPLE_XML)


@pytest.fixture
def sample_snapshot(sample_doc) -> RepositorySnapshot:
    return RepositorySnapshot(sample_doc, 1, None)


@pytest.fixture
def profile_80x24() -> TerminalProfile:
    return TerminalProfile(80, 24)
