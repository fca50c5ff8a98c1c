"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  Every tolerance and runtime limit is pinned here.
"""

import dataclasses
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from nrfactory import capacity as cap
from nrfactory import exclusion as excl
from nrfactory.cli import main as cli_main
from nrfactory.coexistence import overlap_analysis
from nrfactory.propagation import FactoryScenario, Hall, gnb_grid, los_probability, pathloss
from nrfactory.radiolink import AasAntenna, BandConfig, RadioConfig
from nrfactory.timing import (
    Numerology,
    SchedulingConfig,
    TddPattern,
    handover_interruption_budget,
    one_way_latency,
    worst_case_alignment,
)
from nrfactory.usecases import csa_to_network_reliability, find_use_case
from nrfactory.errors import NoUsableSlot

from oracles import (
    alignment_oracle_symbols,
    inf_los_probability_oracle,
    inf_pathloss_oracle,
)

HALL = Hall(120.0, 50.0, 10.0)


def report(criterion: int, label: str, ok: bool, elapsed: float, limit: float):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} - {label} ({elapsed:.2f}s / limit {limit:.0f}s)")
    assert ok, f"criterion {criterion} failed: {label}"
    assert elapsed < limit, f"criterion {criterion} exceeded runtime limit ({elapsed:.1f}s >= {limit}s)"


def test_criterion_1_coexistence_exactness():
    t0 = time.perf_counter()
    a = overlap_analysis(TddPattern.from_string("DDDDUDDDUU"), TddPattern.from_string("DDDDU"))
    ok = (
        a.ul.cross_link == Fraction(1, 3)
        and a.ul.near_far == Fraction(2, 3)
        and a.indoor_dl_safe is True
    )
    b = overlap_analysis(TddPattern.from_string("DDDU"), TddPattern.from_string("DDDDU"))
    ok = ok and b.dl.near_far == Fraction(12, 15) and b.dl.cross_link == Fraction(3, 15)
    report(1, "coexistence slot fractions exact", ok, time.perf_counter() - t0, 1.0)


def test_criterion_2_qos_translation():
    t0 = time.perf_counter()
    ok = abs(csa_to_network_reliability(1e-6, 1) - 0.999) <= 1e-12
    ok = ok and abs(csa_to_network_reliability(1e-8, 1) - 0.9999) <= 1e-12
    report(2, "CSA to network reliability anchors", ok, time.perf_counter() - t0, 1.0)


def test_criterion_3_handover_budget():
    t0 = time.perf_counter()
    got = handover_interruption_budget(
        [
            ("HO command processing", 16, 16),
            ("retune and synchronize", 20, 20),
            ("RACH wait", 0, 10),
            ("RA procedure", 6, 6),
        ]
    )
    report(3, "handover interruption budget (42, 52) ms", got == (42, 52), time.perf_counter() - t0, 1.0)


def test_criterion_4_latency_model():
    t0 = time.perf_counter()
    ok = True

    # (a) worst-case alignment equals the brute-force offset oracle, 200 cases
    rng = random.Random(20240901)
    checked = 0
    while checked < 200:
        slots = "".join(rng.choice("DDUUS") for _ in range(rng.randint(1, 6)))
        scs = rng.choice([15, 30, 60, 120])
        tti = rng.choice([2, 4, 7, 14])
        pdcch = rng.choice([1, 2, 7])
        ul_access = rng.choice(["sr_based", "configured_grant"])
        direction = rng.choice(["DL", "UL"])
        cfg = SchedulingConfig(
            tti_symbols=tti,
            pdcch_occasions_per_slot=pdcch,
            ul_access=ul_access,
            ue_capability=rng.choice(["cap1", "cap2"]),
        )
        num = Numerology(scs)
        pattern = TddPattern.from_string(slots)
        proc = cfg.processing_symbols("pusch", scs)
        try:
            got = worst_case_alignment(pattern, num, cfg, direction)
        except NoUsableSlot:
            continue
        expected = alignment_oracle_symbols(
            slots, (10, 2, 2), direction, tti, pdcch, ul_access, proc
        ) * num.symbol_duration_ms
        ok = ok and got == expected
        checked += 1

    # (b) DUDU with symmetric processing: DL == UL for n in 0..5, exact
    table = {
        (ch, cp, s): 9.0
        for ch in ("pdsch", "pusch")
        for cp in ("cap1", "cap2")
        for s in (15, 30, 60, 120)
    }
    sym_cfg = SchedulingConfig(ul_access="configured_grant", processing_table=table)
    dudu = TddPattern.from_string("DUDU")
    num30 = Numerology(30)
    for n in range(6):
        dl = one_way_latency(dudu, num30, sym_cfg, None, "DL", n)
        ul = one_way_latency(dudu, num30, sym_cfg, None, "UL", n)
        ok = ok and dl.t_up_ms == ul.t_up_ms

    # (c) Potential mid-band configuration: sub-millisecond first delivery
    potential = SchedulingConfig(
        tti_symbols=2,
        pdcch_occasions_per_slot=7,
        harq_feedback_occasions_per_slot=7,
        ul_access="configured_grant",
        ue_capability="cap2",
    )
    ok = ok and one_way_latency(dudu, num30, potential, None, "DL", 0).t_up_ms < 1.0

    # (d) t_up affine in n with slope t_harq, exact
    base_cfg = SchedulingConfig()
    dddsu = TddPattern.from_string("DDDSU")
    base = one_way_latency(dddsu, num30, base_cfg, None, "DL", 0)
    for n in range(1, 8):
        r = one_way_latency(dddsu, num30, base_cfg, None, "DL", n)
        ok = ok and r.t_up_ms == base.t1_ms + n * base.t_harq_ms

    report(4, "latency model (oracle, symmetry, sub-ms, affinity)", ok, time.perf_counter() - t0, 10.0)


def test_criterion_5_capacity_arithmetic():
    t0 = time.perf_counter()
    uc7 = find_use_case("UC7")
    fdd = BandConfig(duplex="FDD", carrier_ghz=2.1, bandwidth_mhz=20.0, scs_khz=30, tti_symbols=14)
    ok = abs(cap.se_per_cell(175, uc7, fdd, "DL", 1) - 3.50) <= 0.01
    ok = ok and abs(cap.se_per_cell(725, uc7, fdd, "DL", 12) - 1.21) <= 0.01
    # every produced CapacityResult honors combined = min and the identity
    sc = FactoryScenario(hall=HALL, gnb_positions=gnb_grid(1, 3, 8.0, HALL), scenario_type="InF_DH", carrier_ghz=3.8)
    band = BandConfig(
        duplex="TDD", carrier_ghz=3.8, bandwidth_mhz=100.0, scs_khz=30,
        tdd_pattern=TddPattern.from_string("DUDU"), tti_symbols=14,
    )
    result = cap.max_served_users(sc, band, RadioConfig(), find_use_case("UC7"), n_drops=1, seed=2)
    ok = ok and result.combined == min(result.max_users_dl, result.max_users_ul)
    ok = ok and result.se_per_cell_dl == pytest.approx(
        cap.se_per_cell(result.max_users_dl, find_use_case("UC7"), band, "DL", 3)
    )
    report(5, "capacity SE identity and min rule", ok, time.perf_counter() - t0, 1.0)


def test_criterion_6_capacity_orderings():
    t0 = time.perf_counter()
    uc1 = find_use_case("UC1")
    seed, drops = 1, 20

    def scenario(n):
        grid = gnb_grid(2, 6, 8.0, HALL) if n == 12 else gnb_grid(1, 3, 8.0, HALL)
        return FactoryScenario(hall=HALL, gnb_positions=grid, scenario_type="InF_DH", carrier_ghz=3.8)

    def band(pattern):
        return BandConfig(
            duplex="TDD", carrier_ghz=3.8, bandwidth_mhz=100.0, scs_khz=30,
            tdd_pattern=TddPattern.from_string(pattern), tti_symbols=14,
        )

    omni = RadioConfig(gnb_nf_db=5.0, ue_nf_db=9.0)
    aas = RadioConfig(antenna=AasAntenna(), gnb_nf_db=5.0, ue_nf_db=9.0)

    omni3 = cap.max_served_users(scenario(3), band("DUDU"), omni, uc1, drops, seed)
    aas3 = cap.max_served_users(scenario(3), band("DUDU"), aas, uc1, drops, seed)
    aas12 = cap.max_served_users(scenario(12), band("DUDU"), aas, uc1, drops, seed)
    dddsu3 = cap.max_served_users(scenario(3), band("DDDSU"), omni, uc1, drops, seed)

    ok = aas12.combined >= aas3.combined >= omni3.combined
    ok = ok and dddsu3.max_users_dl >= omni3.max_users_dl        # DL favors DDDSU
    ok = ok and omni3.max_users_ul >= dddsu3.max_users_ul        # UL favors DUDU
    ok = ok and omni3.combined > dddsu3.combined                 # balanced pattern wins overall
    report(6, "capacity orderings (antenna, density, pattern)", ok, time.perf_counter() - t0, 300.0)


def test_criterion_7_propagation_oracle():
    t0 = time.perf_counter()
    sc = FactoryScenario(
        hall=HALL, gnb_positions=gnb_grid(2, 6, 8.0, HALL), scenario_type="InF_SH", carrier_ghz=3.8,
    )
    ok = True
    rng = random.Random(7)
    distances = [1.0 + 139.0 * i / 49 for i in range(50)]
    for d in distances:
        fc = rng.choice([0.7, 2.1, 3.8, 26.0])
        st = rng.choice(["InF_SH", "InF_DH"])
        los = rng.choice([True, False])
        got = pathloss(st, los, d, fc)
        ok = ok and abs(got - inf_pathloss_oracle(st, los, d, fc)) <= 1e-9
        p_got = los_probability(sc, d, bs_height_m=8.0)
        p_exp = inf_los_probability_oracle(d, 0.60, 2.0, 6.0, 8.0, 1.5)
        ok = ok and abs(p_got - p_exp) <= 1e-9
    report(7, "pathloss and LOS probability vs hand evaluation", ok, time.perf_counter() - t0, 5.0)


def test_criterion_8abc_exclusion_small_instances():
    t0 = time.perf_counter()
    from test_exclusion import grid_search_min_se, tiny_scenario

    rng = np.random.default_rng(777)
    ok = True
    tol = 1e-4
    for trial in range(50):
        use_exclusion = trial % 2 == 1
        sc = tiny_scenario(rng, gamma_scale=0.4 if use_exclusion else 2.0)
        result = excl.solve_maxmin(sc, use_exclusion=use_exclusion, tol_bits=tol)
        # (a) grid-search agreement within 0.02 bits/s/Hz
        oracle = grid_search_min_se(sc, use_exclusion=use_exclusion)
        ok = ok and abs(result.min_se - oracle) <= 0.02
        # (b) constraint residuals within 1e-9 relative
        rho = result.allocation.rho
        ok = ok and bool(np.all(rho >= 0.0))
        ok = ok and bool(np.all(rho.sum(axis=1) <= 1.0 + 1e-9))
        if use_exclusion:
            ok = ok and bool(np.all(result.per_point_power <= sc.gamma_norm * (1 + 1e-9)))
        # (c) max-min equalization at the optimum (unconstrained runs)
        if not use_exclusion:
            ok = ok and float(result.per_user_se.max() - result.min_se) <= 10 * tol
    report(8, "exclusion optimizer vs grid oracle (a-c)", ok, time.perf_counter() - t0, 120.0)


def test_criterion_8d_gamma_sweep_monotone():
    t0 = time.perf_counter()
    sc = excl.table15_scenario(seed=1)
    gammas_dbm = np.linspace(-75.0, -120.0, 10)
    tol = 1e-3
    min_ses = []
    for g in gammas_dbm:
        sg = dataclasses.replace(sc, gamma_norm=excl.gamma_norm_from_dbm(float(g), sc.p_t_mw))
        min_ses.append(excl.solve_maxmin(sg, use_exclusion=True, tol_bits=tol).min_se)
    ok = all(b <= a + 2 * tol for a, b in zip(min_ses, min_ses[1:]))
    ok = ok and min_ses[-1] < min_ses[0]  # the ceiling genuinely bites
    report(8, "exclusion gamma sweep monotone at 72 APs x 112 points (d)", ok, time.perf_counter() - t0, 600.0)


def test_criterion_9_determinism(tmp_path):
    t0 = time.perf_counter()
    ok = True

    def run_twice(args, name, second_extra=()):
        a = tmp_path / f"{name}_a.out"
        b = tmp_path / f"{name}_b.out"
        assert cli_main(args + ["-o", str(a)]) == 0
        assert cli_main(args + list(second_extra) + ["-o", str(b)]) == 0
        return a.read_bytes() == b.read_bytes()

    ok = ok and run_twice(
        ["capacity", "--preset", "tdd3800", "--pattern", "DUDU", "--usecase", "UC7",
         "--gnbs", "3", "--drops", "3", "--seed", "11"],
        "capacity",
        second_extra=["--workers", "2"],  # parallelism must not change bytes
    )
    ok = ok and run_twice(
        ["exclusion", "--table15", "--seed", "4", "--k-points", "8", "--tol-bits", "1e-3"],
        "exclusion",
    )
    ok = ok and run_twice(
        ["sinr-map", "--preset", "tdd3800", "--gnbs", "3", "--resolution", "10"],
        "sinrmap",
    )
    ok = ok and run_twice(
        ["coexist", "--indoor", "DDDDUDDDUU", "--outdoor", "DDDDU"],
        "coexist",
    )
    report(9, "byte-identical outputs for fixed seeds", ok, time.perf_counter() - t0, 120.0)
