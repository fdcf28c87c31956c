"""End-to-end runs on Z/41 * Z/43 * F(x); deselect with -m "not slow"."""

import json
from fractions import Fraction

import numpy as np
import pytest

from sc_engine.cli import run
from sc_engine.parsing import parse_element
from sc_engine.quotient import TRIVIAL, DehnReducer, area_product, injectivity_probe, torsion_probe
from sc_engine.settings import activate, settings

pytestmark = pytest.mark.slow


@pytest.fixture(autouse=True)
def restore_settings():
    saved = settings.model_copy()
    yield
    activate(saved)


@pytest.fixture
def spec_path(tmp_path):
    path = tmp_path / "g41.grp"
    path.write_text("factors: [cyclic 41, cyclic 43]\nfree: [x]\n", encoding="utf-8")
    return path


def test_certify_W20_with_unit_bridges(spec_path, tmp_path, capsys):
    out = tmp_path / "cert.json"
    args = ["--spec", str(spec_path), "--cache-dir", str(tmp_path / "cache"), "--json", "--out", str(out),
            "certify-thm-w", "--n", "20", "--eps", "1"]
    assert run(args) == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["verdict"] == "pass"
    assert not cert["vacuous"]
    assert Fraction(cert["params"]["mu"]) == Fraction(14, 20)
    assert cert["params"]["rho"] == 41
    assert cert["violations"] == []

    assert run(["--json", "verify-trace", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "pass"


def test_subword_audit_of_W20(spec_path, capsys):
    assert run(["--spec", str(spec_path), "--json", "qg-subwords", "--n", "20"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["members"] == 82
    assert report["qg_violations"] == 0


def test_quadrangles_on_a_cyclic_window(spec_path, capsys):
    args = ["--spec", str(spec_path), "--json", "quad-check", "--n", "20", "--eps", "1", "--prefix-len", "30", "--offset", "17"]
    assert run(args) == 0
    assert json.loads(capsys.readouterr().out)["without_common_edge"] == []


# -----------------------------------------------------------------------------
# Quotient probes on G / ⟨⟨W⟩⟩, certified at ε = 0
# -----------------------------------------------------------------------------

def test_products_of_conjugated_relators_reduce_to_identity(theorem_quotient):
    spec = theorem_quotient.base
    alphabet = spec.alphabet()
    reducer = DehnReducer(theorem_quotient)
    rng = np.random.default_rng(2024)
    for _ in range(100):
        factors = []
        for _ in range(int(rng.integers(1, 3))):
            letters = [alphabet[i] for i in rng.integers(0, len(alphabet), size=int(rng.integers(0, 4)))]
            factors.append((spec.reduce(letters), int(rng.integers(0, len(theorem_quotient.relators)))))
        reduction = reducer.run(area_product(theorem_quotient, factors))
        assert reduction.outcome == TRIVIAL
        assert reducer.replay(reduction) == []


def test_ball_of_radius_two_embeds(theorem_quotient):
    report = injectivity_probe(theorem_quotient, 4, workers=4)
    assert report.radius == 2
    assert report.verdict == "pass"
    assert report.violations == []


@pytest.mark.parametrize("literal", ["x", "a b", "x a"])
def test_infinite_order_elements_do_not_collapse(theorem_quotient, literal):
    report = torsion_probe(theorem_quotient, parse_element(literal, theorem_quotient.base), 20)
    assert report.detected_order is None
    assert not report.counterexample
