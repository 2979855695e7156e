from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support.docgen import random_doc, random_line, snapshot_of
from uim import model
from uim.model import parse
from uim.render import TerminalKind, TerminalProfile, to_plain
from uim.repository import RepositorySnapshot, load_directory
from uim.shell import FlowEntry, MenuEntry, ShellSession, open_session
from conftest import SAMPLE_DIR


def fixed_clock() -> str:
    return "2026-01-01T00:00:00Z"


def rows(effect) -> list[str]:
    return [row.rstrip() for row in effect.frame.rows]


@pytest.fixture
def session(sample_snapshot) -> ShellSession:
    sess, _ = open_session(sample_snapshot, TerminalProfile(80, 24),
                           session_id="t1", clock=fixed_clock)
    return sess


class TestOpenSession:
    def test_root_menu_rendered(self, sample_snapshot):
        _, effect = open_session(sample_snapshot, TerminalProfile(80, 24))
        assert rows(effect)[:3] == ["MAIN", "1 Inventory", "2 +Receiving"]
        assert rows(effect)[23] == "0=Back"

    def test_dumb_profile_same_text(self, sample_snapshot):
        profile = TerminalProfile(20, 16, TerminalKind.DUMB)
        _, effect = open_session(sample_snapshot, profile)
        assert to_plain(effect.frame) == \
            b"MAIN\r\n1 Inventory\r\n2 +Receiving\r\n0=Back\r\n"

    def test_big_root_menu_paginated(self):
        rng = random.Random(99)
        doc = random_doc(rng, max_menus=1, big_menus=True)
        while len(doc.screens[doc.root_menu].items) <= 14:
            doc = random_doc(rng, max_menus=1, big_menus=True)
        _, effect = open_session(snapshot_of(doc), TerminalProfile(20, 16))
        assert "1/" in rows(effect)[14]


class TestMenuNavigation:
    def test_number_pushes_submenu(self, session):
        effect = session.handle_line("2")
        assert rows(effect)[0] == "RECEIVING"
        assert len(session.nav) == 2

    def test_zero_pops_to_parent(self, session):
        session.handle_line("2")
        effect = session.handle_line("0")
        assert rows(effect)[0] == "MAIN"
        assert len(session.nav) == 1

    def test_zero_at_root_stays_with_message(self, session):
        effect = session.handle_line("0")
        assert rows(effect)[0] == "MAIN"
        assert rows(effect)[23] == "AT TOP"
        assert len(session.nav) == 1

    def test_out_of_range_invalid(self, session):
        effect = session.handle_line("9")
        assert rows(effect)[23] == "INVALID"

    def test_garbage_invalid(self, session):
        effect = session.handle_line("xyz")
        assert rows(effect)[23] == "INVALID"

    def test_message_clears_on_next_line(self, session):
        session.handle_line("9")
        effect = session.handle_line("2")
        assert rows(effect)[23] == "0=Back"

    def test_pagination_tokens(self):
        rng = random.Random(4)
        doc = random_doc(rng, max_menus=1, big_menus=True)
        while len(doc.screens[doc.root_menu].items) <= 14:
            doc = random_doc(rng, max_menus=1, big_menus=True)
        sess, first = open_session(snapshot_of(doc), TerminalProfile(20, 16))
        assert rows(first)[14].startswith("1/")
        effect = sess.handle_line(">")
        assert rows(effect)[14].startswith("2/")
        effect = sess.handle_line("<")
        assert rows(effect)[14].startswith("1/")
        effect = sess.handle_line("<")  # clamped at first page
        assert rows(effect)[14].startswith("1/")

    def test_item_number_global_across_pages(self):
        rng = random.Random(4)
        doc = random_doc(rng, max_menus=1, big_menus=True)
        while len(doc.screens[doc.root_menu].items) <= 14:
            doc = random_doc(rng, max_menus=1, big_menus=True)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(20, 16))
        sess.handle_line(">")
        effect = sess.handle_line("14")  # item 14 lives on page 2
        assert isinstance(sess.nav[-1], FlowEntry)
        assert not effect.records


class TestFlowTrace:
    def test_count_flow_emits_record_and_restores_menu(self, session):
        effect = session.handle_line("1")
        assert rows(effect)[0] == "COUNT"
        assert isinstance(session.nav[-1], FlowEntry)
        effect = session.handle_line("SKU123")
        assert not effect.records
        effect = session.handle_line("12")
        assert len(effect.records) == 1
        record = effect.records[0]
        assert record.flow == "inv"
        assert record.screen == "count"
        assert record.bindings == {"sku": "SKU123", "qty": "12"}
        assert record.session_id == "t1"
        assert record.ts == "2026-01-01T00:00:00Z"
        assert rows(effect)[0] == "MAIN"
        assert len(session.nav) == 1
        assert session.bindings == {}

    def test_number_field_rejects_letters(self, session):
        session.handle_line("1")
        session.handle_line("SKU123")
        effect = session.handle_line("12x")
        assert rows(effect)[23] == "INVALID"
        assert not effect.records
        effect = session.handle_line("12")
        assert len(effect.records) == 1

    def test_required_field_rejects_empty(self, session):
        session.handle_line("1")
        effect = session.handle_line("")
        assert rows(effect)[23] == "INVALID"

    def test_max_len_enforced(self, session):
        session.handle_line("1")
        effect = session.handle_line("X" * 21)
        assert rows(effect)[23] == "INVALID"

    def test_zero_on_first_field_backs_out(self, session):
        session.handle_line("1")
        effect = session.handle_line("0")
        assert rows(effect)[0] == "MAIN"
        assert len(session.nav) == 1
        assert not effect.records

    def test_double_zero_types_literal_zero(self, session):
        session.handle_line("1")
        effect = session.handle_line("00")
        assert isinstance(session.nav[-1], FlowEntry)  # still in the flow
        effect = session.handle_line("7")
        assert effect.records[0].bindings == {"sku": "0", "qty": "7"}

    def test_masked_field_sets_frame_flag(self):
        doc = parse('<uim root="m">'
                    '<screen type="menu" id="m" title="M"><item label="L" flow="f"/></screen>'
                    '<screen type="input" id="pin" title="PIN">'
                    '<field name="pin" kind="number" required="true" max="4" masked="true"/>'
                    '</screen>'
                    '<flow id="f" start="pin"><on screen="pin" outcome="ok" goto="end"/></flow>'
                    '</uim>')
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(80, 24))
        effect = sess.handle_line("1")
        assert effect.frame.masked_cursor_field is True


SCENARIO_DIR_DOC = """\
<uim root="m">
  <screen type="menu" id="m" title="M"><item label="Go" flow="f"/></screen>
  <screen type="info" id="hello" title="HELLO"><line>Start ${last}.</line></screen>
  <screen type="single" id="pick" title="PICK" var="choice">
    <option label="Small" value="S"/>
    <option label="Large" value="L"/>
  </screen>
  <screen type="multi" id="flags" title="FLAGS" var="flags">
    <option label="Damaged" value="dmg"/>
    <option label="Short" value="short"/>
    <option label="Late" value="late"/>
  </screen>
  <flow id="f" start="hello">
    <on screen="hello" outcome="ok" goto="pick"/>
    <on screen="pick" outcome="ok" goto="flags"/>
    <on screen="pick" outcome="L" goto="end"/>
    <on screen="flags" outcome="ok" goto="end"/>
  </flow>
</uim>
"""


class TestOptionScreens:
    @pytest.fixture
    def sess(self):
        doc = parse(SCENARIO_DIR_DOC)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(80, 24),
                               session_id="t2", clock=fixed_clock)
        return sess

    def test_info_enter_advances(self, sess):
        sess.handle_line("1")
        effect = sess.handle_line("")
        assert rows(effect)[0] == "PICK"

    def test_info_other_input_invalid(self, sess):
        sess.handle_line("1")
        effect = sess.handle_line("x")
        assert rows(effect)[23] == "INVALID"
        assert sess.current_screen_id() == "hello"

    def test_single_binds_and_records(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        effect = sess.handle_line("1")
        assert len(effect.records) == 1
        assert effect.records[0].bindings == {"choice": "S"}
        assert rows(effect)[0] == "FLAGS"
        assert sess.bindings["choice"] == "S"

    def test_single_value_keyed_transition_wins(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        effect = sess.handle_line("2")  # "L" has its own transition to end
        assert len(effect.records) == 1
        assert rows(effect)[0] == "M"
        assert len(sess.nav) == 1

    def test_multi_toggle_and_commit(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        sess.handle_line("1")  # -> flags
        effect = sess.handle_line("1")
        assert rows(effect)[1] == "1 [x] Damaged"
        effect = sess.handle_line("3")
        assert rows(effect)[3] == "3 [x] Late"
        effect = sess.handle_line("1")  # toggle off, selection = {late}
        assert rows(effect)[1] == "1 [ ] Damaged"
        effect = sess.handle_line("2")  # selection = {short, late}
        effect = sess.handle_line("")
        assert len(effect.records) == 1
        assert effect.records[0].bindings == {"flags": "short,late"}
        assert rows(effect)[0] == "M"

    def test_multi_commit_empty_selection(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        sess.handle_line("1")
        effect = sess.handle_line("")
        assert effect.records[0].bindings == {"flags": ""}

    def test_multi_zero_discards(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        sess.handle_line("1")
        sess.handle_line("2")
        effect = sess.handle_line("0")  # back, toggles discarded
        assert rows(effect)[0] == "PICK"
        assert "flags" not in sess.bindings
        assert not effect.records

    def test_back_pops_one_step(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        effect = sess.handle_line("0")  # pick -> back to hello
        assert rows(effect)[0] == "HELLO"

    def test_info_template_sees_flow_bindings(self, sess):
        sess.handle_line("1")
        sess.handle_line("")
        sess.handle_line("1")  # choice=S, now at flags
        sess.handle_line("0")  # back to pick
        effect = sess.handle_line("0")  # back to hello; ${last} unknown -> ""
        assert rows(effect)[1] == "Start ."


class TestResize:
    def test_resize_relayouts(self, session):
        effect = session.handle_resize(20, 16)
        assert session.profile.width == 20
        assert len(effect.frame.rows) == 16

    def test_resize_identical_same_frame(self, session):
        before = session.frame()
        effect = session.handle_resize(80, 24)
        assert effect.frame == before

    def test_resize_below_minimum_clamped(self, session):
        session.handle_resize(2, 2)
        assert (session.profile.width, session.profile.height) == (10, 4)

    def test_resize_clamps_page(self):
        rng = random.Random(4)
        doc = random_doc(rng, max_menus=1, big_menus=True)
        while len(doc.screens[doc.root_menu].items) <= 28:
            doc = random_doc(rng, max_menus=1, big_menus=True)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(20, 16))
        sess.handle_line(">")
        sess.handle_line(">")
        page_before = sess.nav[0].page
        assert page_before == 2
        sess.handle_resize(80, 24)
        count = sess._page_count()
        assert sess.nav[0].page <= count - 1


class TestSnapshotPinning:
    def test_no_adoption_inside_flow(self, session, sample_snapshot):
        session.handle_line("1")
        newer = RepositorySnapshot(sample_snapshot.doc, 2, None)
        assert session.maybe_adopt(newer) is False
        assert session.snapshot.version == 1

    def test_adoption_after_flow(self, session, sample_doc):
        session.handle_line("2")
        newer = RepositorySnapshot(sample_doc, 2, None)
        assert session.maybe_adopt(newer) is True
        assert session.snapshot.version == 2
        # Still at the RECEIVING menu, which exists in the new doc.
        assert session.current_screen_id() == "recv"

    def test_adoption_resets_vanished_menu(self, session):
        session.handle_line("2")
        trimmed = parse('<uim root="main"><screen type="menu" id="main" title="M2">'
                        '<item label="Only" flow="f"/></screen>'
                        '<screen type="info" id="i" title="I"/>'
                        '<flow id="f" start="i"><on screen="i" outcome="ok" goto="end"/></flow>'
                        '</uim>')
        assert session.maybe_adopt(RepositorySnapshot(trimmed, 3, None)) is True
        assert session.current_screen_id() == "main"
        assert len(session.nav) == 1


class TestSampleDirectoryFlows:
    def test_cycle_flow_full_pass(self):
        doc = load_directory(SAMPLE_DIR)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(80, 24),
                               session_id="t3", clock=fixed_clock)
        sess.handle_line("2")        # RECEIVING
        effect = sess.handle_line("2")  # Cycle Count flow
        assert rows(effect)[0] == "CYCLE COUNT"
        effect = sess.handle_line("")   # info ok -> zone
        assert rows(effect)[0] == "ZONE"
        effect = sess.handle_line("2")  # chill
        assert effect.records[0].bindings == {"zone": "CHL"}
        assert rows(effect)[0] == "DAMAGES"
        effect = sess.handle_line("1")
        effect = sess.handle_line("")
        assert effect.records[0].bindings == {"damage": "crushed"}
        assert rows(effect)[0] == "RECEIVING"

    def test_zone_defined_back_exits_flow(self):
        doc = load_directory(SAMPLE_DIR)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(80, 24))
        sess.handle_line("2")
        sess.handle_line("2")
        sess.handle_line("")   # -> zone
        effect = sess.handle_line("0")  # (zone, back) -> end
        assert rows(effect)[0] == "RECEIVING"
        assert len(sess.nav) == 2


def _depth(sess: ShellSession) -> int:
    depth = len(sess.nav)
    top = sess.nav[-1]
    if isinstance(top, FlowEntry):
        depth += len(top.steps)
    return depth


def _max_fields(doc) -> int:
    sizes = [len(s.fields) for s in doc.screens.values()
             if isinstance(s, model.InputScreen)]
    return max(sizes, default=0)


class TestWalkProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
    def test_back_closure(self, doc_seed, walk_seed):
        doc = random_doc(random.Random(doc_seed))
        rng = random.Random(walk_seed)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(20, 16))
        for _ in range(rng.randint(0, 40)):
            effect = sess.handle_line(random_line(rng))
            assert not effect.terminated
        budget = _depth(sess) + _max_fields(doc) + 4
        for step in range(budget + 1):
            if len(sess.nav) == 1 and sess.current_screen_id() == doc.root_menu \
                    and sess.field_index == 0:
                break
            effect = sess.handle_line("0")
            assert not effect.terminated
        assert len(sess.nav) == 1
        assert isinstance(sess.nav[0], MenuEntry)
        assert sess.nav[0].screen_id == doc.root_menu

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_walk_never_faults(self, seed):
        rng = random.Random(seed)
        doc = random_doc(rng)
        snapshot = snapshot_of(doc)
        sess, _ = open_session(snapshot, TerminalProfile(20, 16))
        for _ in range(300):
            effect = sess.handle_line(random_line(rng))
            assert not effect.terminated
            assert effect.frame.height == 16
            assert all(len(r) == 20 for r in effect.frame.rows)
            # Structural invariants of the navigation stack.
            assert isinstance(sess.nav[0], MenuEntry)
            assert sess.nav[0].screen_id == doc.root_menu
            for entry in sess.nav[:-1]:
                assert isinstance(entry, MenuEntry)
            assert sess.current_screen_id() in doc.screens

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_record_bindings_match_screen(self, seed):
        rng = random.Random(seed)
        doc = random_doc(rng)
        sess, _ = open_session(snapshot_of(doc), TerminalProfile(20, 16))
        for _ in range(300):
            effect = sess.handle_line(random_line(rng))
            for record in effect.records:
                screen = doc.screens[record.screen]
                if isinstance(screen, model.InputScreen):
                    assert set(record.bindings) == {f.name for f in screen.fields}
                else:
                    assert set(record.bindings) == {screen.var}
                assert record.flow in doc.flows
