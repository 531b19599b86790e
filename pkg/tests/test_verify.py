import numpy as np
import pytest
from conftest import make_channel

from mimo_sdof.exceptions import InvalidParameterError
from mimo_sdof.matcore import numeric_rank
from mimo_sdof.phaseplan import (
    AntennaConfig,
    PhasePlan,
    Regime,
    Scheme,
    check_decoding_alignment,
    check_security_alignment,
    check_security_decoding,
    classify_regime,
    optimal_plan,
)
from mimo_sdof.schemes import draw_compression
from mimo_sdof.verify import (
    RANK_CSV_HEADER,
    appendix_factors,
    build_decode_pair_alignment,
    build_decode_pair_decoding,
    build_leakage_pair_alignment,
    build_leakage_pair_decoding,
    check_appendix_decomposition,
    predicted_ranks,
    rank_gaps,
    rank_reports,
    rank_reports_csv,
    violated_plan,
)


def _setup(m, n, plan=None, seed=0):
    cfg = AntennaConfig(m, n)
    plan = plan or optimal_plan(cfg)
    return cfg, plan, make_channel(cfg, plan, seed), draw_compression(plan, cfg, seed + 1000)


def test_decoding_leakage_pair_example():
    _, plan, cs, comp = _setup(2, 3)
    a, b = build_leakage_pair_decoding(cs, plan, comp)
    assert a.shape == (12, 12)
    # Phase-I block (9 rows) plus one 3-row block per data phase, over the 12 AN symbols
    assert b.shape == (15, 12)
    assert numeric_rank(a) == 12 and numeric_rank(b) == 12


def test_alignment_leakage_pair_example():
    _, plan, cs, comp = _setup(3, 2)
    c, d = build_leakage_pair_alignment(cs, plan, comp)
    assert numeric_rank(c) == 8 and numeric_rank(d) == 8
    _, vplan, cs, comp = _setup(3, 2, PhasePlan("alignment", 2, 3, 2))
    c, d = build_leakage_pair_alignment(cs, vplan, comp)
    assert numeric_rank(c) - numeric_rank(d) == 10 - 8


def test_decoding_decode_pair_example_and_symmetry():
    _, plan, cs, comp = _setup(2, 3)
    for rx in (1, 2):
        h, intf = build_decode_pair_decoding(cs, plan, comp, receiver=rx)
        assert numeric_rank(h) == 6 and numeric_rank(intf) == 3


def test_decoding_decode_pair_at_m_equals_n():
    _, plan, cs, comp = _setup(2, 2, PhasePlan("decoding", 2, 1))
    h, intf = build_decode_pair_decoding(cs, plan, comp)
    assert numeric_rank(h) - numeric_rank(intf) == 2


def test_alignment_decode_pair_examples():
    _, plan, cs, comp = _setup(3, 2)
    e, f = build_decode_pair_alignment(cs, plan, comp)
    assert numeric_rank(e) == 10 and numeric_rank(f) == 4
    _, plan0, cs, comp = _setup(3, 2, PhasePlan("alignment", 2, 2, 0))
    e, f = build_decode_pair_alignment(cs, plan0, comp)
    assert numeric_rank(e) - numeric_rank(f) == 4
    _, plan4, cs, comp = _setup(4, 2)
    assert plan4.tau3 == 2
    e, f = build_decode_pair_alignment(cs, plan4, comp)
    assert numeric_rank(e) - numeric_rank(f) == 4 * 2


def test_builders_reject_wrong_scheme():
    _, plan, cs, comp = _setup(3, 2)
    with pytest.raises(InvalidParameterError):
        build_leakage_pair_decoding(cs, plan, comp)
    _, plan, cs, comp = _setup(2, 3)
    with pytest.raises(InvalidParameterError):
        build_decode_pair_alignment(cs, plan, comp)


def test_appendix_a_example():
    _, plan, cs, comp = _setup(2, 3)
    reps = {r.matrix: r for r in check_appendix_decomposition(cs, plan, comp, "A-appendix")}
    assert reps["L"].measured == 12 and reps["L"].predicted == 12
    assert reps["Q"].measured == min(3, 9)
    assert all(r.passed for r in reps.values())


def test_appendix_b_example():
    _, plan, cs, comp = _setup(3, 2)
    reps = {r.matrix: r for r in check_appendix_decomposition(cs, plan, comp, "B-appendix")}
    assert reps["H12_II_Phi"].measured == 4
    assert all(r.passed for r in reps.values())


def test_appendix_products_reproduce_chain_matrices():
    for m, n, which in ((2, 3, "A-appendix"), (5, 6, "A-appendix"), (3, 2, "B-appendix"), (6, 4, "B-appendix")):
        _, plan, cs, comp = _setup(m, n)
        f = appendix_factors(cs, plan, comp, which)
        assert np.allclose(f["U"] @ f["L"], f["target"], atol=1e-10)


def test_rank_report_csv():
    _, plan, cs, comp = _setup(2, 3)
    reps = rank_reports(cs, plan, comp)
    assert [r.matrix for r in reps] == ["A", "B", "H1", "interferer"]
    text = rank_reports_csv(reps)
    assert text.splitlines()[0] == ",".join(RANK_CSV_HEADER)
    assert text.splitlines()[1] == "decoding,2,3,3,1,0,A,12,12,true"


def _equivalence_plans(cfg):
    regime = classify_regime(cfg)
    plans = [optimal_plan(cfg), violated_plan(cfg, "security")]
    if regime != Regime.DECODING:
        plans.append(violated_plan(cfg, "decoding"))
    return plans


@pytest.mark.parametrize("m,n", [(2, 3), (3, 4), (4, 4), (3, 2), (5, 4), (4, 2), (5, 2), (6, 3)])
def test_rank_predicates_match_constraint_predicates(m, n):
    cfg = AntennaConfig(m, n)
    for plan in _equivalence_plans(cfg):
        cs = make_channel(cfg, plan, 2)
        comp = draw_compression(plan, cfg, 3)
        reps = rank_reports(cs, plan, comp)
        assert all(r.passed for r in reps), [(r.matrix, r.predicted, r.measured) for r in reps]
        r = {x.matrix: x.measured for x in reps}
        if plan.scheme == Scheme.DECODING:
            assert (r["A"] == r["B"]) == check_security_decoding(cfg, plan)
        else:
            assert (r["C"] == r["D"]) == check_security_alignment(cfg, plan)
            assert (r["E"] - r["F"] == cfg.effective_M * plan.tau2) == check_decoding_alignment(cfg, plan)


def test_violated_plans():
    assert violated_plan(AntennaConfig(2, 3)).taus() == (3, 2, 0)
    assert violated_plan(AntennaConfig(3, 2)).taus() == (2, 3, 2)
    assert violated_plan(AntennaConfig(3, 2), "decoding").taus() == (2, 2, 0)
    with pytest.raises(InvalidParameterError):
        violated_plan(AntennaConfig(1, 3))
    with pytest.raises(InvalidParameterError):
        violated_plan(AntennaConfig(2, 3), "decoding")


def test_rank_gaps_on_violation():
    cfg = AntennaConfig(3, 2)
    plan = violated_plan(cfg)
    cs = make_channel(cfg, plan, 0)
    gaps = rank_gaps(rank_reports(cs, plan, draw_compression(plan, cfg, 1)))
    assert gaps["security"] == (2, 2)
    assert gaps["decoding"] == (0, 0)


def test_predictions_for_silent_rejected():
    with pytest.raises(InvalidParameterError):
        predicted_ranks(AntennaConfig(1, 2), PhasePlan("silent", 0, 0))


def test_mirrored_receiver_constructions_have_same_ranks():
    for m, n in ((2, 3), (3, 2), (4, 2)):
        _, plan, cs, comp = _setup(m, n)
        build = build_leakage_pair_decoding if plan.scheme == Scheme.DECODING else build_leakage_pair_alignment
        x2, y2 = build(cs, plan, comp, receiver=2)
        x1, y1 = build(cs, plan, comp, receiver=1)
        assert numeric_rank(x1) == numeric_rank(x2) and numeric_rank(y1) == numeric_rank(y2)
