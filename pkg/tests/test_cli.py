from __future__ import annotations

import json
import subprocess
import sys

import pytest

from uim.cli import main
from conftest import GOLDEN_DIR, SAMPLE_DIR, SAMPLE_TABULAR_DIR, SAMPLE_XML

GOLDEN_CASES = [
    ("%s_%dx%d_%s" % (screen, w, h, mode), screen, w, h, mode)
    for screen in ("main", "welcome", "count", "zone", "damages")
    for (w, h) in ((80, 24), (20, 16))
    for mode in ("plain", "ansi")
]


def run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "uim", *args],
                          capture_output=True, timeout=30)


class TestValidate:
    def test_sample_clean_exit_zero(self):
        result = run_cli("validate", str(SAMPLE_DIR))
        assert result.returncode == 0
        assert b"OK" in result.stdout

    def test_tabular_clean_exit_zero(self):
        result = run_cli("validate", str(SAMPLE_TABULAR_DIR))
        assert result.returncode == 0

    def test_broken_repo_exit_nonzero(self, tmp_path):
        (tmp_path / "bad.xml").write_text(
            '<uim root="main"><screen type="menu" id="main" title="M">'
            '<item label="A" flow="ghost"/></screen></uim>')
        result = run_cli("validate", str(tmp_path))
        assert result.returncode == 1
        assert b"DanglingRef" in result.stdout

    def test_in_process_entry_point(self, tmp_path, capsys):
        (tmp_path / "repo.xml").write_text(SAMPLE_XML)
        assert main(["validate", str(tmp_path)]) == 0
        assert "OK" in capsys.readouterr().out


class TestRender:
    @pytest.mark.parametrize("name,screen,width,height,mode",
                             GOLDEN_CASES, ids=[c[0] for c in GOLDEN_CASES])
    def test_golden(self, name, screen, width, height, mode):
        result = run_cli("render", str(SAMPLE_DIR), "--screen", screen,
                         "--width", str(width), "--height", str(height), "--%s" % mode)
        assert result.returncode == 0
        expected = (GOLDEN_DIR / ("%s.bin" % name)).read_bytes()
        assert result.stdout == expected

    def test_menu_plain_transcript(self):
        result = run_cli("render", str(SAMPLE_DIR), "--screen", "main", "--plain")
        assert result.stdout == b"MAIN\r\n1 Inventory\r\n2 +Receiving\r\n0=Back\r\n"

    def test_unknown_screen(self):
        result = run_cli("render", str(SAMPLE_DIR), "--screen", "ghost")
        assert result.returncode == 1

    def test_bad_flags_exit_2(self):
        result = run_cli("render", str(SAMPLE_DIR), "--screen", "main", "--sideways")
        assert result.returncode == 2


class TestSimulate:
    def test_inline_script_prints_record(self):
        result = run_cli("simulate", str(SAMPLE_DIR), "--script", "1\\nSKU123\\n12\\n")
        assert result.returncode == 0
        lines = result.stdout.decode().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["flow"] == "inv"
        assert record["bindings"] == {"sku": "SKU123", "qty": "12"}
        assert record["session_id"] == "sim"

    def test_script_file(self, tmp_path):
        script = tmp_path / "walk.txt"
        script.write_text("2\n2\n\n1\n\n")
        result = run_cli("simulate", str(SAMPLE_DIR), "--script", str(script))
        assert result.returncode == 0
        lines = [json.loads(line) for line in result.stdout.decode().splitlines()]
        assert [r["screen"] for r in lines] == ["zone", "damages"]
        assert lines[0]["bindings"] == {"zone": "AMB"}

    def test_echo_frames(self):
        result = run_cli("simulate", str(SAMPLE_DIR), "--script", "2\\n",
                         "--echo-frames")
        assert b"RECEIVING" in result.stdout

    def test_tabular_backend_same_records(self):
        xml = run_cli("simulate", str(SAMPLE_DIR), "--script", "1\\nSKU1\\n5\\n")
        tab = run_cli("simulate", str(SAMPLE_TABULAR_DIR), "--script", "1\\nSKU1\\n5\\n")
        strip = lambda out: [
            {k: v for k, v in json.loads(line).items() if k != "ts"}
            for line in out.decode().splitlines()]
        assert strip(xml.stdout) == strip(tab.stdout)
