import pytest

from qmanizk import lemmas, protocol_qsp
from qmanizk.dual_mode import ot


@pytest.fixture(scope="module")
def baseline():
    return {name: lemmas.run_suites([name], 7) for name in lemmas.SUITES}


@pytest.mark.parametrize("name", list(lemmas.SUITES))
def test_suite_is_green(name, baseline):
    rows = baseline[name]
    assert rows and all(r.suite == name for r in rows)
    failed = [f"{r.name}: {r.detail}" for r in rows if not r.passed]
    assert not failed


def test_passed_flags_are_plain_bools(baseline):
    assert all(type(r.passed) is bool for rows in baseline.values() for r in rows)


def test_suites_are_reproducible():
    a = lemmas.run_suites(["energy"], 3)
    b = lemmas.run_suites(["energy"], 3)
    assert [r.detail for r in a] == [r.detail for r in b]


def test_unknown_suite():
    with pytest.raises(KeyError):
        lemmas.run_suites(["nope"], 0)


def test_dropping_the_x_pad_turns_xz_red(monkeypatch):
    # the verifier forgets to undo the X half of the pad
    monkeypatch.setattr(protocol_qsp, "_pad_frame", lambda proof, pads, j: (int(proof.x[j]), int(proof.z[j]) ^ pads[j][1]))
    assert not all(r.passed for r in lemmas.run_suites(["xz"], 7))


def test_literal_ot_convention_turns_ot_red(monkeypatch):
    monkeypatch.setattr(ot, "DEFAULT_CONVENTION", ot.LITERAL)
    rows = lemmas.run_suites(["ot"], 7)
    assert not all(r.passed for r in rows)
    assert any("wrong" in r.detail and not r.passed for r in rows)
