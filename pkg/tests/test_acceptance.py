"""The ten acceptance criteria, each at its stated tolerance and time budget.

Each test records a one-line verdict that is printed in the terminal summary.
"""
import time
from fractions import Fraction as F

import oracles
from napt.algebra import AlgebraEngine, a_integrate, a_ma_mixed, a_validate, export_graph, export_measure, export_metric
from napt.complex import EdgePoint, MetricGraph, Vertex, compose, refine, subdivide, uniform_grid
from napt.energy import (
    appendix_constants,
    check_estimates,
    check_identities,
    cocycle_defect,
    cs_form,
    energy_E,
    functional_I,
    functional_J,
    measure_energy,
    sample_size,
)
from napt.graph import GraphEngine, PLMetric, descend_metric, envelope, laplacian, lift_metric, ma, solve
from napt.linalg import lagrange_eval
from napt.measure import AtomicMeasure
from napt.sampling import (
    GraphSampler,
    ToricSampler,
    battery_samples,
    random_graph,
    random_graph_measure,
    random_toric_measure,
    rng_for,
)
from napt.toric import (
    LatticePolytope,
    MinOf,
    ToricEngine,
    TropicalMetric,
    default_init,
    obstacle_from_metric,
    scale_point,
    t_envelope,
    t_ma,
    t_scale,
    t_solve_detailed,
)

SQUARE = LatticePolytope([(0, 0), (1, 0), (0, 1), (1, 1)])
INTERVAL = LatticePolytope([(0,), (1,)])


def _g1():
    return MetricGraph(["a", "b"], [("e", "a", "b", 1)], {"a": 1, "b": 1}, 2)


def test_criterion_01_exact_identities(record):
    t0 = time.perf_counter()
    rng = rng_for(101)
    failures = []
    count = 0
    while count < 200:
        g = random_graph(rng, 10)
        eng = GraphEngine(g)
        samples = battery_samples(GraphSampler(eng, rng), 10, 4)
        count += len(samples)
        for i, (ms, _) in enumerate(samples):
            for u in ms:
                if laplacian(u).total_mass() != 0:
                    failures.append(("laplacian.total", i))
            f_const = (ms[0] - ms[1]).is_constant()
            cs = -cs_form(ms[0], ms[1], ms[0], ms[1], [], eng)
            if cs < 0 or (cs == 0) != f_const:
                failures.append(("cauchy_schwarz.equality", i))
            if cocycle_defect(ms[0], ms[1], ms[2], eng) != 0:
                failures.append(("cocycle", i))
        rows = check_identities(samples, eng)
        failures += [(r.name, r.sample) for r in rows if not r.passed]
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 5
    record(1, "exact identity suite, graph engine", ok, f"{count} samples, {elapsed:.2f}s, {len(failures)} failures")
    assert not failures, failures[:5]
    assert elapsed < 5


def test_criterion_02_g1_numerics(record):
    g = _g1()
    eng = GraphEngine(g)
    v = PLMetric(g, {"a": 0, "b": 0}, {"e": [(F(1, 2), F(-1, 2))]})
    edges, rho, V = oracles.plain_graph(g)
    prof = oracles.plain_profiles(v)
    E, I, J = energy_E(v, None, eng), functional_I(v, None, eng), functional_J(v, None, eng)
    Es = measure_energy(AtomicMeasure({EdgePoint("e", F(1, 2)): 1}), eng)
    want = (F(-1, 4), F(1, 2), F(1, 4), F(1, 4))
    oracle = (oracles.quadratic_energy(edges, rho, V, v.values, prof), oracles.quadratic_I(V, prof),
              oracles.quadratic_J(V, prof))
    ok = (E, I, J, Es) == want and oracle == want[:3] and I == 2 * J
    record(2, "fixture G1 numerics", ok, f"E={E} I={I} J={J} E*={Es}")
    assert ok


def test_criterion_03_solver_round_trips(record):
    t0 = time.perf_counter()
    rng = rng_for(303)
    bad = 0
    for _ in range(100):
        g = random_graph(rng, 12)
        mu = random_graph_measure(g, rng)
        if ma(solve(mu, g)) != mu:
            bad += 1
    for _ in range(100):
        g = random_graph(rng, 12)
        eng = GraphEngine(g)
        u = GraphSampler(eng, rng).metric()
        d = solve(ma(u), g) - u
        if not d.is_constant():
            bad += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10
    record(3, "solver round trips on graphs", ok, f"200 cases, {bad} mismatches, {elapsed:.2f}s")
    assert bad == 0
    assert elapsed < 10


def test_criterion_04_inequality_battery(record):
    t0 = time.perf_counter()
    rng = rng_for(404)
    graph_rows = []
    done = 0
    while done < 500:
        g = random_graph(rng, 8)
        eng = GraphEngine(g)
        samples = battery_samples(GraphSampler(eng, rng), 25, sample_size(1))
        graph_rows += check_estimates(samples, eng, appendix_constants(1)).rows
        done += len(samples)
    eng2 = ToricEngine(SQUARE)
    tsamples = battery_samples(ToricSampler(SQUARE, rng), 100, sample_size(2))
    toric_rows = check_estimates(tsamples, eng2, appendix_constants(2), tol=1e-8).rows
    elapsed = time.perf_counter() - t0
    names = {r.name for r in graph_rows}
    g_fail = [r for r in graph_rows if not r.passed]
    t_fail = [r for r in toric_rows if not r.passed]
    t_min = min(r.margin for r in toric_rows)
    expected = {"segment_I", "mixed_cs", "quasi_triangle", "I_by_J", "mixed_backgrounds", "background_swap", "ma_variation", "I_lipschitz", "J_lipschitz", "ma_lower_bound", "integral_holder",
                "segment_J", "j_chain.1", "j_chain.2", "j_chain.3", "i_minus_j.lower", "i_minus_j.upper", "sup_bound.lower", "sup_bound.upper"}
    ok = not g_fail and not t_fail and expected <= names and elapsed < 60
    record(4, "inequality battery", ok,
           f"{done} graph + 100 toric tuples, {len(graph_rows) + len(toric_rows)} rows, "
           f"toric min margin {t_min:.3g}, {elapsed:.1f}s")
    assert expected <= names, expected - names
    assert not g_fail, [(r.name, r.sample, r.margin) for r in g_fail[:5]]
    assert not t_fail, [(r.name, r.sample, r.margin) for r in t_fail[:5]]
    assert elapsed < 60


def _grid_psi(grid, rng, den=4):
    vals = {v: F(rng.randint(-8, 8), den) for v in grid.target.vertices}
    return descend_metric(PLMetric(grid.target, vals), grid)


def test_criterion_05_envelope_properties(record):
    rng = rng_for(505)
    problems = []
    fd_worst = 0.0
    for trial in range(12):
        g = random_graph(rng, 5)
        eng = GraphEngine(g)
        grid = uniform_grid(g, 4)
        verts = [Vertex(v) for v in grid.target.vertices]
        pts = [grid.retract(p) for p in verts]
        u = GraphSampler(eng, rng).metric()
        gu = uniform_grid(g, 4, u.breakpoint_points())
        if envelope(u, gu) != u:
            problems.append("idempotence")
        psi = _grid_psi(grid, rng)
        bump = _grid_psi(grid, rng)
        psi2 = descend_metric(PLMetric(grid.target, {v: max(lift_metric(psi, grid)(Vertex(v)),
                                                             lift_metric(bump, grid)(Vertex(v)))
                                                     for v in grid.target.vertices}), grid)
        P1, P2 = envelope(psi, grid), envelope(psi2, grid)
        if any(P1(p) > P2(p) for p in pts):
            problems.append("monotonicity")
        diff = max(abs(psi(p) - bump(p)) for p in pts)
        Pb = envelope(bump, grid)
        if max(abs(P1(p) - Pb(p)) for p in pts) > diff:
            problems.append("lipschitz")
        d = ma(P1).integrate(lambda p: psi(p) - P1(p))
        if d != 0:
            problems.append("orthogonality")
        # finite-difference derivative of E o P against int f dMA(P(psi))
        base = energy_E(P1, None, eng)
        deriv = ma(P1).integrate(bump)
        for t in (F(1, 100), F(1, 1000)):
            Pt = envelope(psi + bump * t, grid)
            fd = (energy_E(Pt, None, eng) - base) / t
            err = abs(float(fd - deriv))
            fd_worst = max(fd_worst, err / float(t))
            if err > 10 * float(t):
                problems.append(f"finite-difference t={t}")
    tor_defect = 0.0
    for P in (INTERVAL, SQUARE):
        s = ToricSampler(P, rng)
        for _ in range(10):
            psi = MinOf([obstacle_from_metric(s.metric()), obstacle_from_metric(s.metric())])
            u = t_envelope(psi, P)
            d = t_ma(u).integrate(lambda w: psi(w) - u(w))
            tor_defect = max(tor_defect, abs(float(d)))
            if any(u(w) > psi(w) for w in t_ma(u)):
                problems.append("toric below obstacle")
            v = s.metric()
            if t_envelope(obstacle_from_metric(v), P) != v:
                problems.append("toric idempotence")
    if tor_defect > 1e-8:
        problems.append("toric orthogonality")
    ok = not problems
    record(5, "envelope properties", ok,
           f"worst |FD error|/t = {fd_worst:.3g}, toric defect {tor_defect:.1e}, problems={sorted(set(problems))}")
    assert ok, problems


def test_criterion_06_toric_oracles(record):
    rng = rng_for(606)
    TRI = LatticePolytope([(0, 0), (1, 0), (0, 1)])
    eng = {INTERVAL: ToricEngine(INTERVAL), SQUARE: ToricEngine(SQUARE), TRI: ToricEngine(TRI)}
    problems = []
    for _ in range(40):
        u = ToricSampler(INTERVAL, rng, max_extra=3).metric()
        mu = t_ma(u)
        if dict(mu.items()) != oracles.slope_jump_ma(u.raw_pieces, INTERVAL.volume) or mu.total_mass() != 1:
            problems.append("n=1 oracle")
    for _ in range(40):
        P = rng.choice([SQUARE, TRI])
        u = ToricSampler(P, rng, max_extra=4 - len(P.vertices)).metric()
        mu = t_ma(u)
        if dict(mu.items()) != oracles.triple_area_ma(u.raw_pieces, P.volume) or mu.total_mass() != 1:
            problems.append("n=2 oracle")
    for _ in range(20):
        P = rng.choice([INTERVAL, SQUARE, TRI])
        u = ToricSampler(P, rng).metric()
        t = rng.choice([F(1, 3), F(1, 2), F(3, 2), F(2), F(7, 3)])
        ut = t_scale(u, t)
        if t_ma(ut) != t_ma(u).pushforward(lambda w: scale_point(w, t)):
            problems.append("scaling law")
        if energy_E(ut, None, eng[P]) != t * energy_E(u, None, eng[P]):
            problems.append("energy homogeneity")
    ok = not problems
    record(6, "toric oracles and scaling", ok, f"100 metrics, problems={sorted(set(problems))}")
    assert ok, problems


def test_criterion_07_toric_solver(record):
    t0 = time.perf_counter()
    rng = rng_for(707)
    worst_res = 0.0
    worst_gap = 0.0
    monotone = True
    for _ in range(20):
        mu = random_toric_measure(rng, 2, 8)
        r1 = t_solve_detailed(mu, SQUARE, tol=1e-9)
        r2 = t_solve_detailed(mu, SQUARE, tol=1e-9,
                              init=lambda P, atoms: default_init(P, atoms, center=(F(1, 5), F(2, 3))))
        worst_res = max(worst_res, float(r1.residual), float(r2.residual))
        for r in (r1, r2):
            monotone &= all(x <= y for x, y in zip(r.F_history, r.F_history[1:]))
            got = t_ma(r.metric)
            worst_res = max(worst_res, max(float(abs(got[w] - mu[w])) for w in mu))
        d = [float(r1.metric(w) - r2.metric(w)) for w in mu]
        worst_gap = max(worst_gap, max(d) - min(d))
    elapsed = time.perf_counter() - t0
    ok = worst_res <= 1e-9 and monotone and worst_gap <= 1e-7 and elapsed < 30
    record(7, "toric Calabi-Yau solver", ok,
           f"max residual {worst_res:.2e}, uniqueness gap {worst_gap:.2e}, {elapsed:.1f}s")
    assert worst_res <= 1e-9
    assert monotone
    assert worst_gap <= 1e-7
    assert elapsed < 30


def test_criterion_08_smoothing_monotonicity(record):
    rng = rng_for(808)
    problems = []
    chains = 0
    strict = 0
    for _ in range(6):
        g0 = random_graph(rng, 5)
        chain = []
        cur = g0
        for level in range(4):
            pts = sorted({EdgePoint(e.id, e.length * rng.randint(1, 3) / 4) for e in
                          rng.sample(list(cur.edges), min(2, len(cur.edges)))}, key=lambda p: p.sort_key())
            anchors = [Vertex(rng.choice(cur.vertices))] + pts[:1]
            grafts = [(p, rng.choice([F(1, 2), F(1)])) for p in anchors]
            s = refine(cur, pts, grafts)
            chain.append(s)
            cur = s.target
        # composite retractions from the finest model down to each level
        down = [None] * 5
        acc = None
        for k in range(3, -1, -1):
            acc = chain[k] if acc is None else compose(chain[k], acc)
            down[k] = acc
        finest = cur
        mu = random_graph_measure(finest, rng, max_atoms=5)
        values = []
        for k in range(5):
            nu = mu if k == 4 else mu.pushforward(down[k].retract)
            gk = finest if k == 4 else down[k].source
            values.append(measure_energy(nu, GraphEngine(gk)))
        chains += 1
        strict += sum(x < y for x, y in zip(values, values[1:]))
        if any(x > y for x, y in zip(values, values[1:])):
            problems.append(("not nondecreasing", values))
        if max(values) > values[-1]:
            problems.append(("exceeds E*(mu)", values))
    ok = not problems
    record(8, "smoothing monotonicity along nested refinements", ok, f"{chains} chains of 4 refinements, {strict} strict increases")
    assert ok, problems


def test_criterion_09_cross_engine(record):
    rng = rng_for(909)
    g = _g1()
    grid = uniform_grid(g, 12)
    X = grid.target
    alg = export_graph(X)
    aeng, geng = AlgebraEngine(alg), GraphEngine(X)
    assert a_validate(alg).geometric
    names = list(X.vertices)
    metrics = []
    for _ in range(50):
        k = rng.randint(1, 4)
        pts = rng.sample(names, k)
        w = [F(rng.randint(1, 5)) for _ in pts]
        mu = AtomicMeasure({Vertex(p): x / sum(w) for p, x in zip(pts, w)})
        metrics.append(solve(mu, X) + rng.choice([F(0), F(1, 3), F(-2)]))
    problems = 0
    for i, u in enumerate(metrics):
        v = metrics[(i + 1) % len(metrics)]
        um, vm = export_metric(u), export_metric(v)
        if a_ma_mixed([um], alg) != export_measure(ma(u)):
            problems += 1
        if energy_E(um, vm, aeng) != energy_E(u, v, geng):
            problems += 1
        if functional_I(um, vm, aeng) != functional_I(u, v, geng):
            problems += 1
        nu = AtomicMeasure({Vertex(p): F(1, 3) for p in rng.sample(names, 3)})
        if a_integrate(um - vm, export_measure(nu), alg) != nu.integrate(lambda p: u(p) - v(p)):
            problems += 1
    record(9, "cross-engine agreement on G1 export", problems == 0, f"50 metrics, {problems} mismatches")
    assert problems == 0


def test_criterion_10_polynomiality(record):
    rng = rng_for(1010)
    problems = []
    cases = 0
    for engine_kind in ("graph", "toric"):
        for _ in range(15):
            if engine_kind == "graph":
                eng = GraphEngine(random_graph(rng, 6))
                s = GraphSampler(eng, rng)
            else:
                eng = ToricEngine(SQUARE)
                s = ToricSampler(SQUARE, rng)
            phi, psi = s.metric(), s.metric()
            n = eng.n
            nodes = [F(k, n + 1) for k in range(n + 2)]
            vals = [energy_E(eng.combine(phi, psi, t), None, eng) for t in nodes]
            held = F(2, 7)
            pred = lagrange_eval(nodes, vals, held)
            if pred != energy_E(eng.combine(phi, psi, held), None, eng):
                problems.append(engine_kind)
            cases += 1
    record(10, "polynomiality of energy along segments", not problems, f"{cases} segments, problems={problems}")
    assert not problems
