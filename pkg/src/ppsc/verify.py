"""Verification suites for the mechanism's structural, privacy and convergence properties.

Each suite returns a :class:`SuiteResult` listing every individual check
with its measured value.  ``SCALES`` fixes the sample sizes: ``full`` runs
the sizes required for acceptance, ``small`` is a quick smoke pass.
"""

from __future__ import annotations

import itertools
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis, fixtures, numerics
from .mechanism import (
    NoiseModel,
    derive_seed,
    dppsc_batch,
    make_rng,
    random_gossip_matrix,
    rppsc_batch,
    run_dppsc,
    run_rppsc,
    uniform_gossip_matrix,
)
from .netgraph import (
    Graph,
    OrientedTree,
    greedy_independent_partition,
    nonisomorphic_trees,
    prufer_to_tree,
    random_connected_graph,
    random_tree,
    ring_graph,
    spanning_tree,
)
from .privacy import (
    AdversaryObservations,
    PriorModel,
    TradeoffParams,
    check_non_identifiability,
    dp_budget,
    dp_ratio_check,
    map_estimate,
    mle_estimate,
    objective,
    tradeoff_optimize,
)
from .symbolic import (
    MechanismMatrices,
    dependence_oracle,
    dependence_predicate,
    extract_matrices,
    graphical_model,
    matrix_violations,
    run_symbolic,
)

SCALES = {
    "small": dict(conservation_runs=300, conservation_nmax=12, sweep_trees=60, sweep_nmax=12,
                  exhaustive_nmax=4, unlabeled_n=None, sampled_cases=300, cov_runs=20_000,
                  dp_pairs=40, dp_outputs=200, adv_runs=6, adv_l=(1, 5, 100), mean_runs=10_000,
                  mean_steps=500, enc_runs=20_000, tradeoff_draws=5),
    "full": dict(conservation_runs=10_000, conservation_nmax=20, sweep_trees=500, sweep_nmax=20,
                 exhaustive_nmax=5, unlabeled_n=6, sampled_cases=10_000, cov_runs=100_000,
                 dp_pairs=1000, dp_outputs=1000, adv_runs=20, adv_l=(1, 5, 100), mean_runs=100_000,
                 mean_steps=500, enc_runs=100_000, tradeoff_draws=20),
}


@dataclass
class Check:
    label: str
    passed: bool
    value: object = None

    def to_dict(self) -> dict:
        return {"label": self.label, "passed": bool(self.passed), "value": _jsonable(self.value)}


@dataclass
class SuiteResult:
    name: str
    title: str
    checks: list[Check] = field(default_factory=list)
    elapsed: float = 0.0
    limit: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label: str, passed, value=None) -> None:
        self.checks.append(Check(label, bool(passed), value))

    def summary(self) -> str:
        failed = [c.label for c in self.checks if not c.passed]
        status = "PASS" if self.passed else "FAIL"
        tail = f" failed: {'; '.join(failed)}" if failed else ""
        return f"{status} {self.name}: {self.title} ({len(self.checks)} checks){tail}"

    def to_dict(self, timing: bool = False) -> dict:
        out = {"name": self.name, "title": self.title, "passed": self.passed,
               "checks": [c.to_dict() for c in self.checks]}
        if timing:
            out["elapsed"] = round(self.elapsed, 3)
        return out


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def _random_ordered_tree(n: int, rng: np.random.Generator) -> OrientedTree:
    return spanning_tree(random_tree(n, rng), int(rng.integers(2**63)))


# -- suites -------------------------------------------------------------------

def suite_example(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("example", "worked five-node example: symbolic outputs and covariance")
    t = fixtures.example_tree()
    start = time.perf_counter()
    state = run_symbolic(t)
    lines = tuple(state.format().splitlines())
    lap = graphical_model(state).laplacian
    elapsed = time.perf_counter() - start
    r.add("symbolic outputs match", lines == fixtures.EXAMPLE_OUTPUT, list(lines))
    r.add("covariance / sigma^2 matches", np.array_equal(lap, fixtures.EXAMPLE_LAPLACIAN), lap)
    r.add("diagonal is (2,1,1,3,1)", list(np.diag(lap)) == [2, 1, 1, 3, 1], np.diag(lap))
    r.add("symbolic run under 1 ms", elapsed < 1e-3, elapsed)
    return r


def suite_conservation(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("conservation", "sum conservation of D-PPSC and R-PPSC runs", limit=30)
    rng = make_rng(seed)
    worst = {"dppsc": 0.0, "rppsc": 0.0}
    families = ("gaussian", "laplace", "uniform")
    for k in range(cfg["conservation_runs"]):
        n = int(rng.integers(2, cfg["conservation_nmax"] + 1))
        g = random_connected_graph(n, float(rng.uniform(0.0, 0.5)), rng)
        beta = rng.normal(0, 10, n)
        noise = NoiseModel(families[k % 3], float(rng.normal(0, 3)), float(rng.uniform(0.1, 25)))
        s = beta.sum()
        t = spanning_tree(g, derive_seed(seed, 2 * k))
        d = run_dppsc(t, beta, noise, seed=derive_seed(seed, 2 * k))
        worst["dppsc"] = max(worst["dppsc"], abs(d.final.sum() - s) / (1 + abs(s)))
        p = uniform_gossip_matrix(g) if k % 2 else random_gossip_matrix(g, rng)
        rr = run_rppsc(g, p, beta, noise, seed=derive_seed(seed, 2 * k + 1))
        worst["rppsc"] = max(worst["rppsc"], abs(rr.final.sum() - s) / (1 + abs(s)))
    for alg, v in worst.items():
        r.add(f"{alg} relative sum error <= 1e-9", v <= 1e-9, v)
    return r


def _sweep_trees(cfg: dict, seed: int):
    rng = make_rng(seed)
    for _ in range(cfg["sweep_trees"]):
        n = int(rng.integers(2, cfg["sweep_nmax"] + 1))
        yield _random_ordered_tree(n, rng)


def suite_non_identifiability(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("non_identifiability", "rank deficiency of C and its kernel certificate", limit=60)
    rank_ok = tail_ok = cert_ok = True
    worst_cert = 0.0
    for t in _sweep_trees(cfg, seed):
        m = extract_matrices(run_symbolic(t))
        n = t.n
        rank_ok &= numerics.exact_rank(m.C) <= n - 1
        tail = t.directed_edges[-1][0]
        tail_ok &= not np.any(m.C[tail - 1])
        ni = check_non_identifiability(m)
        res = float(np.abs(m.C @ ni.certificate).max()) if ni.ok else math.inf
        worst_cert = max(worst_cert, res)
        cert_ok &= ni.ok and res <= 1e-8
    r.add("rank(C) <= n-1", rank_ok)
    r.add("row of the last tail is zero", tail_ok)
    r.add("kernel certificate |C eta| <= 1e-8", cert_ok, worst_cert)
    return r


def suite_noise_structure(cfg: dict, seed: int, matrices: MechanismMatrices | None = None) -> SuiteResult:
    r = SuiteResult("noise_structure", "D has full column rank and D D^T is a tree Laplacian", limit=60)
    if matrices is not None:
        problems = matrix_violations(matrices)
        r.add("supplied matrices satisfy the structure", not problems, problems)
        return r
    bad = []
    count = 0
    for t in _sweep_trees(cfg, seed):
        m = extract_matrices(run_symbolic(t))
        problems = matrix_violations(m)
        count += 1
        if problems:
            bad.append({"edges": t.directed_edges, "problems": problems})
    r.add(f"all {count} sweep trees satisfy the structure", not bad, bad[:3])
    return r


def _predicate_mismatches(t: OrientedTree) -> int:
    state = run_symbolic(t)
    n = t.n
    return sum(dependence_oracle(state, i, j)[0] != dependence_predicate(t, i, j)
               for i in range(1, n + 1) for j in range(i + 1, n + 1))


def _all_orderings(tree: Graph):
    es = tree.sorted_edges()
    for orient in itertools.product((0, 1), repeat=len(es)):
        directed = [(a, b) if o == 0 else (b, a) for (a, b), o in zip(es, orient)]
        for perm in itertools.permutations(directed):
            yield OrientedTree(tree, perm)


def suite_dependence(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("dependence", "dependence predicates agree with the symbolic oracle", limit=600)
    cases = mism = 0
    for n in range(2, cfg["exhaustive_nmax"] + 1):
        for seq in itertools.product(range(1, n + 1), repeat=max(n - 2, 0)):
            tree = prufer_to_tree(seq, n) if n > 2 else Graph(2, [(1, 2)])
            for t in _all_orderings(tree):
                cases += 1
                mism += _predicate_mismatches(t)
    r.add(f"exhaustive labelled n<={cfg['exhaustive_nmax']}: zero mismatches", mism == 0,
          {"orderings": cases, "mismatches": mism})
    if cfg["unlabeled_n"]:
        n = cfg["unlabeled_n"]
        cases = mism = 0
        for tree in nonisomorphic_trees(n):
            for t in _all_orderings(tree):
                cases += 1
                mism += _predicate_mismatches(t)
        r.add(f"exhaustive unlabelled n={n}: zero mismatches", mism == 0,
              {"orderings": cases, "mismatches": mism})
    rng = make_rng(seed)
    mism = 0
    for _ in range(cfg["sampled_cases"]):
        mism += _predicate_mismatches(_random_ordered_tree(int(rng.integers(6, 11)), rng))
    r.add("sampled n in 6..10: zero mismatches", mism == 0,
          {"orderings": cfg["sampled_cases"], "mismatches": mism})
    return r


def suite_covariance(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("covariance", "empirical output covariance equals sigma^2 times the tree Laplacian",
                    limit=120)
    rng = make_rng(seed)
    t = _random_ordered_tree(8, rng)
    sigma2 = 2.0
    lap = graphical_model(run_symbolic(t)).laplacian
    beta = rng.normal(0, 5, 8)
    x = dppsc_batch(t, beta, NoiseModel("gaussian", 0.0, sigma2), cfg["cov_runs"], rng)
    xc = x - x.mean(axis=0)
    prod = xc[:, :, None] * xc[:, None, :]
    runs = x.shape[0]
    cov = prod.sum(axis=0) / (runs - 1)
    se = prod.std(axis=0, ddof=1) / math.sqrt(runs)
    z = np.abs(cov - sigma2 * lap) / se
    r.add("every entry within 5 standard errors", bool(np.all(z <= 5)), float(z.max()))
    return r


def _adjacent_pair(n: int, delta: float, rng: np.random.Generator):
    beta = rng.normal(0, 5, n)
    i, j = rng.choice(n, 2, replace=False)
    shift = delta * rng.uniform(0.2, 1.0) / 2
    bp = beta.copy()
    bp[i] += shift
    bp[j] -= shift
    return beta, bp


def suite_differential_privacy(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("differential_privacy", "observed log density ratios stay below the budget",
                    limit=120)
    rng = make_rng(seed)
    worst_gap = -math.inf
    violations = 0
    kernel_zero = True
    for k in range(cfg["dp_pairs"]):
        t = fixtures.example_tree() if k == 0 else _random_ordered_tree(int(rng.integers(3, 13)), rng)
        state = run_symbolic(t)
        m = extract_matrices(state)
        gm = graphical_model(state)
        delta = float(rng.uniform(0.1, 2.0))
        v = float(rng.uniform(0.5, 10.0))
        beta, bp = _adjacent_pair(t.n, delta, rng)
        eps = dp_budget(m, gm, delta, v)
        ratio = dp_ratio_check(m, beta, bp, v, cfg["dp_outputs"], derive_seed(seed, k), delta=delta)
        worst_gap = max(worst_gap, ratio - eps)
        violations += ratio > eps
        if k < 20:
            eta = check_non_identifiability(m).certificate[:, 0]
            shifted = beta + 0.3 * eta / max(np.abs(eta).sum(), 1e-12)
            if np.abs(m.C @ eta).max() < 1e-12 and np.abs(eta).sum() > 1e-9:
                kr = dp_ratio_check(m, beta, shifted, v, 50, derive_seed(seed, 10**6 + k), delta=1.0)
                kernel_zero &= abs(kr) <= 1e-9
    r.add("max log ratio <= epsilon on every pair", violations == 0,
          {"pairs": cfg["dp_pairs"], "violations": violations, "max(ratio - eps)": worst_gap})
    r.add("kernel shifts give zero log ratio", kernel_zero)
    m = extract_matrices(run_symbolic(fixtures.example_tree()))
    gm = graphical_model(run_symbolic(fixtures.example_tree()))
    base = dp_budget(m, gm, 0.75, 1.5)
    exact = all(dp_budget(m, gm, 0.75 * c, 1.5) == c * base and dp_budget(m, gm, 0.75, 1.5 * c) == base / c
                for c in (0.5, 2.0, 4.0))
    close = all(math.isclose(dp_budget(m, gm, 0.75 * c, 1.5), c * base, rel_tol=4e-16)
                and math.isclose(dp_budget(m, gm, 0.75, 1.5 * c), base / c, rel_tol=4e-16)
                for c in (3.0, 7.0, 0.1))
    r.add("epsilon is linear in delta and proportional to 1/v", exact and close, base)
    return r


def suite_adversary(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("adversary", "MLE is non-unique and contains the truth; MAP is unique", limit=30)
    rng = make_rng(seed)
    singular = True
    membership = []
    zero_noise = []
    map_unique = True
    map_res = []
    map_sum = []
    kernel_dims = []
    for k in range(cfg["adv_runs"]):
        t = fixtures.example_tree() if k == 0 else _random_ordered_tree(int(rng.integers(3, 11)), rng)
        m = extract_matrices(run_symbolic(t))
        n = t.n
        beta = rng.normal(0, 5, n)
        sigma2 = float(rng.uniform(0.5, 4.0))
        dims = []
        for l in cfg["adv_l"]:
            ys = dppsc_batch(t, beta, NoiseModel("gaussian", 0.0, sigma2), l, rng)
            obs = AdversaryObservations(ys, m, sigma2)
            mle = mle_estimate(obs)
            singular &= not mle.unique
            dims.append(mle.kernel_dim)
            membership.append(mle.membership_residual(beta))
            a = rng.normal(size=(n, n))
            prior = PriorModel(rng.normal(0, 5, n), a @ a.T / n + np.eye(n))
            try:
                mp = map_estimate(obs, prior)
            except numerics.NumericsError:
                map_unique = False
                continue
            map_res.append(mp.residuals["stationarity"])
            map_sum.append(abs(mp.point.sum() - ys[0].sum()))
        kernel_dims.append(dims)
        clean = AdversaryObservations([m.C @ beta], m, sigma2)
        zero_noise.append(mle_estimate(clean).membership_residual(beta))
    r.add("E_mle singular on every run", singular, kernel_dims)
    r.add("true beta in the MLE solution set (residual <= 1e-8)", max(membership) <= 1e-8,
          {"max_noisy": max(membership), "max_noise_free": max(zero_noise)})
    r.add("E_map system unique", map_unique)
    r.add("MAP KKT residual <= 1e-8", bool(map_res) and max(map_res) <= 1e-8, max(map_res, default=None))
    r.add("MAP sum matches 1^T y_1 within 1e-10", bool(map_sum) and max(map_sum) <= 1e-10,
          max(map_sum, default=None))
    return r


def suite_mean_limit(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("mean_limit", "expected state limit of randomized gossip", limit=180)
    rng = make_rng(seed)
    g = ring_graph(4)
    p = random_gossip_matrix(g, rng)
    x0 = rng.normal(0, 3, 4)
    m = analysis.mean_limit(g, p, x0, 2.0)
    x = rppsc_batch(p, x0, NoiseModel("gaussian", 2.0, 1.0), cfg["mean_steps"], cfg["mean_runs"], rng)
    se = x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
    z = np.abs(x.mean(axis=0) - m) / se
    r.add("Monte Carlo mean within 4 standard errors (mu=2)", bool(np.all(z <= 4)), float(z.max()))
    pu = uniform_gossip_matrix(g)
    mu0 = analysis.mean_limit(g, pu, x0, 0.0)
    err = float(np.abs(mu0 - x0.mean()).max())
    r.add("doubly stochastic, mu=0: uniform average to 1e-10", err <= 1e-10, err)
    return r


def _exact_q_t(p, t: np.ndarray) -> np.ndarray | None:
    """Exact ``P(Q_t)`` by inclusion-exclusion over all node subsets (small n only)."""
    n = p.P.shape[0]
    if n > 16:
        return None
    masks = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)
    touch = np.array([(p.P[s].sum() + p.P[~s][:, s].sum()) / n for s in masks])
    sign = np.where(masks.sum(axis=1) % 2, -1.0, 1.0)
    return (sign[:, None] * np.maximum(1.0 - touch, 0.0)[:, None] ** t[None, :]).sum(axis=0)


def suite_encryption(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("encryption", "full-encryption probability bounds and encryption time", limit=180)
    cases = (("five-node network", fixtures.example_graph()), ("10-ring", ring_graph(10)))
    eps = 0.01
    for k, (label, g) in enumerate(cases):
        p = uniform_gossip_matrix(g)
        lower, upper = analysis.encryption_time_bounds(g, p, eps)
        t_max = int(math.ceil(upper)) + 20
        st = analysis.estimate_q_t(g, p, t_max, cfg["enc_runs"], derive_seed(seed, k))
        lb = analysis.encryption_prob_lower_bound(g, p, greedy_independent_partition(g), st.t)
        ub = analysis.encryption_prob_upper_bound(p, st.t)
        r.add(f"{label}: MC above the partition lower bound", bool(np.all(lb <= st.q_t + 3 * st.half_width)),
              float(np.max(lb - st.q_t - 3 * st.half_width)))
        r.add(f"{label}: MC below 1-(1-xi_m)^t", bool(np.all(ub >= st.q_t - 3 * st.half_width)),
              float(np.max(st.q_t - 3 * st.half_width - ub)))
        t_hat = st.t_eps(eps)
        exact = _exact_q_t(p, st.t.astype(float))
        t_exact = int(np.nonzero(1 - exact <= eps)[0][0]) + 1 if exact is not None else None
        r.add(f"{label}: MC T_eps within the encryption-time bounds",
              t_hat is not None and lower <= t_hat <= upper,
              {"t_hat": t_hat, "lower": lower, "upper": upper, "t_exact": t_exact})
    return r


def suite_tradeoff(cfg: dict, seed: int) -> SuiteResult:
    r = SuiteResult("tradeoff", "closed-form noise parameters minimise the trade-off objective", limit=10)
    rng = make_rng(seed)
    h = 1e-3
    grid_ok = local_ok = True
    worst = 0.0
    for _ in range(cfg["tradeoff_draws"]):
        p = TradeoffParams(float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.1, 5.0)),
                           float(rng.uniform(-3, 3)), float(rng.uniform(0.2, 4.0)))
        opt = tradeoff_optimize(p)
        rho = p.mu_tilde + np.arange(-250, 251) * h
        s = np.arange(1, 12_001) * h
        vals = objective(p, rho[:, None], s[None, :])
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        dr, ds = abs(rho[i] - opt.rho_gamma), abs(s[j] - opt.sigma_gamma2)
        worst = max(worst, dr, ds)
        grid_ok &= dr <= h and ds <= h
        f0 = objective(p, opt.rho_gamma, opt.sigma_gamma2)
        local_ok &= all(objective(p, opt.rho_gamma + a, opt.sigma_gamma2 + b) > f0
                        for a in (-h, 0, h) for b in (-h, 0, h) if (a, b) != (0, 0))
    r.add("grid minimiser within 1e-3 of the closed form", grid_ok, worst)
    r.add("closed form is a strict local minimum", local_ok)
    spot = tradeoff_optimize(TradeoffParams(0.5, 1.0, 0.0, 1.0))
    err = abs(spot.sigma_gamma2 - (math.sqrt(5) - 1) / 2)
    r.add("spot value (sqrt(5)-1)/2 within 1e-9", err <= 1e-9 and spot.rho_gamma == 0.0, spot.sigma_gamma2)
    return r


def suite_reproducibility(cfg: dict, seed: int) -> SuiteResult:
    from . import cli

    r = SuiteResult("reproducibility", "repeated runs produce byte-identical reports")
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(tmp)
        graph = base / "graph.txt"
        graph.write_text("5\n" + "\n".join(f"{a} {b}" for a, b in fixtures.EXAMPLE_EDGES) + "\n")
        for algorithm in ("dppsc", "rppsc"):
            config = cli.ExperimentConfig.from_dict({
                "graph_path": "graph.txt", "algorithm": algorithm,
                "noise": {"family": "laplace", "mean": 0.0, "variance": 2.0},
                "seeds": {"master": seed % (2**32), "runs": 4},
                "beta": [1.0, 2.0, 3.0, 4.0, 5.0],
                "dp": {"delta": 1.0, "v": 1.0},
            }, base / "config.json")
            outputs = []
            for k in range(2):
                out = base / f"{algorithm}{k}"
                cli.cmd_run(config, out)
                outputs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
            r.add(f"{algorithm}: outputs identical", outputs[0] == outputs[1], sorted(outputs[0]))
    return r


SUITES: dict[str, tuple[int, Callable[[dict, int], SuiteResult]]] = {
    "example": (1, suite_example),
    "conservation": (2, suite_conservation),
    "non_identifiability": (3, suite_non_identifiability),
    "noise_structure": (4, suite_noise_structure),
    "dependence": (5, suite_dependence),
    "covariance": (6, suite_covariance),
    "differential_privacy": (7, suite_differential_privacy),
    "adversary": (8, suite_adversary),
    "mean_limit": (9, suite_mean_limit),
    "encryption": (10, suite_encryption),
    "tradeoff": (11, suite_tradeoff),
    "reproducibility": (12, suite_reproducibility),
}


def run_suite(name: str, scale: str = "small", master_seed: int = 20240601, **kwargs) -> SuiteResult:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {sorted(SCALES)}")
    index, fn = SUITES[name]
    start = time.perf_counter()
    result = fn(SCALES[scale], derive_seed(master_seed, index), **kwargs)
    result.elapsed = time.perf_counter() - start
    return result


def run_all(scale: str = "small", master_seed: int = 20240601, names=None,
            matrices: MechanismMatrices | None = None, progress=None) -> list[SuiteResult]:
    results = []
    for name in names or SUITES:
        kwargs = {"matrices": matrices} if name == "noise_structure" and matrices is not None else {}
        res = run_suite(name, scale, master_seed, **kwargs)
        if progress is not None:
            progress(res)
        results.append(res)
    return results
