"""Command-line experiment runner.

Commands: ``run``, ``verify``, ``attack`` and ``analyze``.  Experiments are
described by a single JSON config with a mandatory master seed; per-run seeds
are derived from ``(master, run index)`` so output files are a pure function
of the config.

Exit codes: 0 when everything passes, 1 when a verification suite fails,
2 on configuration or IO errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, verify
from .mechanism import (
    GossipMatrix,
    NoiseModel,
    default_rppsc_steps,
    derive_seed,
    dppsc_batch,
    make_rng,
    run_dppsc,
    run_rppsc,
    uniform_gossip_matrix,
)
from .netgraph import Graph, GraphError, OrientedTree, greedy_independent_partition, load_graph, spanning_tree
from .privacy import (
    AdversaryObservations,
    PriorModel,
    check_non_identifiability,
    dp_budget,
    dp_ratio_check,
    map_estimate,
    mle_estimate,
)
from .symbolic import MechanismMatrices, extract_matrices, graphical_model, run_symbolic

SUMMARY_VERSION = 1
SUMMARY_COLUMNS = ("run", "seed", "steps", "input_sum", "output_sum", "sum_error", "max_abs_output")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    """Invalid or unreadable experiment configuration."""


@dataclass
class ExperimentConfig:
    path: Path
    graph_path: Path
    algorithm: str
    noise: NoiseModel
    master_seed: int
    runs: int
    steps: int | None = None
    beta: list[float] | None = None
    tree: list[tuple[int, int]] | None = None
    gossip: list[list[float]] | None = None
    dp: dict | None = None
    adversary: dict | None = None
    analysis: dict | None = None
    matrices: MechanismMatrices | None = None
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        return cls.from_dict(data, path)

    @classmethod
    def from_dict(cls, data: dict, path) -> "ExperimentConfig":
        path = Path(path)

        def fail(msg):
            raise ConfigError(f"{path}: {msg}")

        if "graph_path" not in data:
            fail("missing required field 'graph_path'")
        graph_path = (path.parent / data["graph_path"]).resolve()
        algorithm = data.get("algorithm", "dppsc")
        if algorithm not in ("dppsc", "rppsc"):
            fail(f"algorithm must be 'dppsc' or 'rppsc', got {algorithm!r}")
        seeds = data.get("seeds")
        if not isinstance(seeds, dict) or "master" not in seeds:
            fail("seeds.master is required")
        master = seeds["master"]
        if not isinstance(master, int) or isinstance(master, bool) or master < 0:
            fail("seeds.master must be a non-negative integer")
        runs = seeds.get("runs", 1)
        if not isinstance(runs, int) or runs < 0:
            fail("seeds.runs must be a non-negative integer")
        nd = data.get("noise", {})
        try:
            noise = NoiseModel(nd.get("family", "gaussian"), float(nd.get("mean", 0.0)),
                               float(nd.get("variance", 1.0)))
        except (ValueError, TypeError, AttributeError) as exc:
            fail(f"noise: {exc}")
        steps = data.get("steps")
        if steps is not None and (not isinstance(steps, int) or steps < 1):
            fail("steps must be a positive integer")
        dp = data.get("dp")
        if dp is not None:
            for key in ("delta", "v"):
                if not isinstance(dp.get(key), (int, float)) or dp[key] <= 0:
                    fail(f"dp.{key} must be positive")
        adversary = data.get("adversary")
        if adversary is not None:
            l = adversary.get("l", 1)
            if not isinstance(l, int) or l < 1:
                fail("adversary.l must be a positive integer")
        matrices = None
        if "matrices" in data:
            try:
                matrices = MechanismMatrices(np.array(data["matrices"]["C"], dtype=np.int64),
                                             np.array(data["matrices"]["D"], dtype=np.int64))
            except (KeyError, TypeError, ValueError) as exc:
                fail(f"matrices: expected integer arrays C and D ({exc})")
        tree = data.get("tree")
        if tree is not None:
            tree = [tuple(int(v) for v in e) for e in tree]
        return cls(path=path, graph_path=graph_path, algorithm=algorithm, noise=noise,
                   master_seed=master, runs=runs, steps=steps, beta=data.get("beta"), tree=tree,
                   gossip=data.get("gossip"), dp=dp, adversary=adversary,
                   analysis=data.get("analysis"), matrices=matrices,
                   outputs=data.get("outputs", {}), raw=data)

    def graph(self) -> Graph:
        if not self.graph_path.exists():
            raise ConfigError(f"graph file not found: {self.graph_path}")
        try:
            return load_graph(self.graph_path)
        except (GraphError, OSError) as exc:
            raise ConfigError(str(exc)) from exc

    def initial_values(self, g: Graph) -> np.ndarray:
        if self.beta is None:
            return np.arange(1, g.n + 1, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (g.n,):
            raise ConfigError(f"{self.path}: beta must have {g.n} entries")
        return beta

    def oriented_tree(self, g: Graph) -> OrientedTree:
        if self.tree is not None:
            try:
                return OrientedTree(g, tuple(self.tree))
            except GraphError as exc:
                raise ConfigError(f"{self.path}: tree: {exc}") from exc
        try:
            return spanning_tree(g, derive_seed(self.master_seed, 0))
        except GraphError as exc:
            raise ConfigError(f"{self.graph_path}: {exc}") from exc

    def gossip_matrix(self, g: Graph) -> GossipMatrix:
        try:
            if self.gossip is None:
                return uniform_gossip_matrix(g)
            return GossipMatrix(g, np.asarray(self.gossip, dtype=float))
        except GraphError as exc:
            raise ConfigError(f"{self.path}: gossip: {exc}") from exc

    def echo(self) -> dict:
        return self.raw


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(verify._jsonable(obj), sort_keys=True, indent=2) + "\n")


def _prepare_out(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"{out}: cannot create output directory ({exc.strerror})") from exc
    return out


def _summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# ppsc run summary v{SUMMARY_VERSION}: {','.join(SUMMARY_COLUMNS)}\n")
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


# -- commands -----------------------------------------------------------------

def cmd_run(config: ExperimentConfig, out, redact: bool = False) -> dict:
    """Execute the configured mechanism for every seeded run and write its artifacts."""
    g = config.graph()
    out = _prepare_out(out)
    beta = config.initial_values(g)
    traces, rows = [], []
    invariants = {"sum_conserved_each_step": True, "edges_in_graph": True,
                  "packet_matches_state": True}
    symbolic_section = None
    matrices = None
    if config.algorithm == "dppsc":
        tree = config.oriented_tree(g)
        state = run_symbolic(tree)
        matrices = extract_matrices(state)
        gm = graphical_model(state)
        symbolic_section = {
            "tree": [list(e) for e in tree.directed_edges],
            "outputs": state.format().splitlines(),
            "covariance_over_sigma2": gm.laplacian,
        }
        invariants["final_matches_matrices"] = True
    else:
        p = config.gossip_matrix(g)
        steps = config.steps or default_rppsc_steps(g.n)
    for k in range(config.runs):
        seed = derive_seed(config.master_seed, k + 1)
        if config.algorithm == "dppsc":
            trace = run_dppsc(tree, beta, config.noise, seed=seed)
            expected = matrices.C @ beta + matrices.D @ trace.gammas
            err = float(np.abs(trace.final - expected).max())
            invariants["final_matches_matrices"] &= err <= 1e-10 * (1 + np.abs(beta).max())
        else:
            if not g.is_connected():
                raise ConfigError(f"{config.graph_path}: graph is disconnected")
            trace = run_rppsc(g, p, beta, config.noise, steps=steps, seed=seed)
        prev = np.array(trace.initial)
        scale = 1.0 + abs(beta.sum())
        for s in trace.steps:
            cur = np.array(s.state)
            invariants["sum_conserved_each_step"] &= abs(cur.sum() - prev.sum()) <= 1e-9 * scale
            invariants["edges_in_graph"] &= g.has_edge(s.tail, s.head)
            invariants["packet_matches_state"] &= math.isclose(
                s.omega, prev[s.tail - 1] - s.gamma, rel_tol=1e-12, abs_tol=1e-12 * scale)
            prev = cur
        traces.append(trace.to_dict(graph_ref=str(config.raw["graph_path"]), redact=redact))
        rows.append({
            "run": k, "seed": seed, "steps": len(trace.steps),
            "input_sum": float(beta.sum()), "output_sum": float(trace.final.sum()),
            "sum_error": float(abs(trace.final.sum() - beta.sum())),
            "max_abs_output": float(np.abs(trace.final).max()),
        })
    report = {
        "config": config.echo(),
        "command": "run",
        "runs": rows,
        "invariants": [{"name": k, "passed": bool(v)} for k, v in sorted(invariants.items())],
    }
    if symbolic_section is not None:
        report["symbolic"] = symbolic_section
        privacy = {"kernel_dim": check_non_identifiability(matrices).kernel_dim}
        if config.dp is not None:
            privacy["epsilon_bound"] = dp_budget(matrices, gm, config.dp["delta"], config.dp["v"])
        report["privacy"] = privacy
    else:
        report["analysis"] = _analysis_section(config, g, p, mc=False)
    _dump(out / "traces.json", {"graph_ref": str(config.raw["graph_path"]), "runs": traces})
    (out / "summary.csv").write_text(_summary_csv(rows))
    _dump(out / "report.json", report)
    return report


def _analysis_section(config: ExperimentConfig, g: Graph, p: GossipMatrix, mc: bool) -> dict:
    opts = config.analysis or {}
    eps = float(opts.get("epsilon", 0.01))
    if not 0 < eps < 1:
        raise ConfigError(f"{config.path}: analysis.epsilon must lie in (0, 1)")
    xi = analysis.xi_vector(p)
    lower, upper = analysis.encryption_time_bounds(g, p, eps)
    t_max = int(opts.get("t_max", math.ceil(upper) + 20))
    ts = np.arange(1, t_max + 1)
    part = greedy_independent_partition(g)
    try:
        lb = analysis.encryption_prob_lower_bound(g, p, part, ts)
    except ValueError:
        lb = analysis.singleton_lower_bound(p, ts)
    x0 = config.initial_values(g)
    section = {
        "xi": xi,
        "xi_m": float(xi.min()),
        "bounds": {
            "partition_lower_bound": [[int(t), float(b)] for t, b in zip(ts, lb)],
            "upper_bound": [[int(t), float(b)] for t, b in zip(ts, analysis.encryption_prob_upper_bound(p, ts))],
            "encryption_time": {"epsilon": eps, "lower": lower, "upper": upper},
        },
        "mean_limit": analysis.mean_limit(g, p, x0, config.noise.mean),
    }
    if mc:
        runs = int(opts.get("runs", 10_000))
        st = analysis.estimate_q_t(g, p, t_max, runs, derive_seed(config.master_seed, 10**6))
        section["mc"] = {
            "runs": runs,
            "q_t": [[int(t), float(q), float(h)] for t, q, h in zip(st.t, st.q_t, st.half_width)],
            "t_eps": st.t_eps(eps),
            "xi_hat": st.xi_hat,
        }
    return section


def cmd_analyze(config: ExperimentConfig, out) -> dict:
    """Encryption-probability bounds, encryption time and expected-state limit."""
    g = config.graph()
    if not g.is_connected():
        raise ConfigError(f"{config.graph_path}: graph is disconnected")
    out = _prepare_out(out)
    report = _analysis_section(config, g, config.gossip_matrix(g), mc=True)
    _dump(out / "analysis.json", report)
    return report


def cmd_attack(config: ExperimentConfig, out) -> dict:
    """MLE/MAP reconstruction from D-PPSC outputs and the empirical DP log-ratio."""
    if config.adversary is None:
        raise ConfigError(f"{config.path}: attack needs an 'adversary' section")
    g = config.graph()
    out = _prepare_out(out)
    tree = config.oriented_tree(g)
    state = run_symbolic(tree)
    m = extract_matrices(state)
    gm = graphical_model(state)
    beta = config.initial_values(g)
    adv = config.adversary
    l = int(adv.get("l", 1))
    sigma2 = config.noise.variance
    rng = make_rng(derive_seed(config.master_seed, 2 * 10**6))
    samples = dppsc_batch(tree, beta, config.noise, l, rng)
    obs = AdversaryObservations(samples, m, sigma2)
    mle = mle_estimate(obs)
    dims_by_l = {str(k): mle_estimate(AdversaryObservations(samples[:k], m, sigma2)).kernel_dim
                 for k in sorted({1, l})}
    report = {
        "config": config.echo(),
        "command": "attack",
        "noise_model_note": "adversary assumes Gaussian noise" if config.noise.family != "gaussian" else None,
        "mle": {"point": mle.point, "kernel_dim": mle.kernel_dim, "unique": mle.unique,
                "kernel_dim_by_l": dims_by_l, "residual": mle.residual,
                "truth_membership_residual": mle.membership_residual(beta)},
    }
    prior_cfg = adv.get("prior")
    if prior_cfg is not None:
        mu = beta if prior_cfg.get("mu", "truth") == "truth" else np.asarray(prior_cfg["mu"], dtype=float)
        tau = float(prior_cfg.get("tau", 1.0))
        if tau <= 0 or mu.shape != (g.n,):
            raise ConfigError(f"{config.path}: adversary.prior needs tau > 0 and mu of length {g.n}")
        mp = map_estimate(obs, PriorModel.isotropic(mu, tau))
        report["map"] = {"point": mp.point, "residuals": mp.residuals,
                         "error": float(np.abs(mp.point - beta).max())}
    if config.dp is not None:
        delta, v = float(config.dp["delta"]), float(config.dp["v"])
        bp = beta.copy()
        bp[0] += delta / 2
        bp[1] -= delta / 2
        trials = int(adv.get("trials", 1000))
        report["epsilon_bound"] = dp_budget(m, gm, delta, v)
        report["max_log_ratio"] = dp_ratio_check(m, beta, bp, v, trials,
                                                 derive_seed(config.master_seed, 3 * 10**6), delta=delta)
    _dump(out / "attack.json", report)
    return report


def cmd_verify(config: ExperimentConfig | None, scale: str, out=None, progress=None, names=None) -> dict:
    """Run the verification suites; supplied mechanism matrices are checked structurally."""
    master = config.master_seed if config is not None else 20240601
    matrices = config.matrices if config is not None else None
    results = verify.run_all(scale, master, names=names, matrices=matrices, progress=progress)
    report = {
        "command": "verify",
        "scale": scale,
        "master_seed": master,
        "passed": all(r.passed for r in results),
        "suites": [r.to_dict() for r in results],
    }
    if out is not None:
        _dump(_prepare_out(out) / "report.json", report)
    return report


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppsc", description="Privacy-preserving summation gossip experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "execute the configured mechanism"),
                           ("attack", "MLE/MAP and differential-privacy attack report"),
                           ("analyze", "encryption-time and mean-limit analysis"),
                           ("verify", "run the verification suites")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=name != "verify", help="experiment JSON file")
        p.add_argument("--out", default=None, help="output directory (default: config outputs.dir or ./out)")
        if name == "run":
            p.add_argument("--redact", action="store_true", help="drop noise values and states from traces")
        if name == "verify":
            p.add_argument("--scale", choices=sorted(verify.SCALES), default="small")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.load(args.config) if args.config else None
        out = args.out
        if out is None:
            has_dir = config is not None and "dir" in config.outputs
            out = config.path.parent / config.outputs["dir"] if has_dir else Path("out")
        if args.command == "run":
            report = cmd_run(config, out, redact=args.redact)
            ok = all(i["passed"] for i in report["invariants"])
            print(f"{len(report['runs'])} run(s) written to {out}")
            return EXIT_OK if ok else EXIT_FAIL
        if args.command == "attack":
            report = cmd_attack(config, out)
            print(json.dumps({k: report[k] for k in ("epsilon_bound", "max_log_ratio") if k in report}))
            print(f"mle kernel dimension {report['mle']['kernel_dim']}")
            return EXIT_OK
        if args.command == "analyze":
            report = cmd_analyze(config, out)
            enc = report["bounds"]["encryption_time"]
            print(f"xi_m={report['xi_m']:.6g} T_eps bounds [{enc['lower']:.4g}, {enc['upper']:.4g}]"
                  f" MC T_eps={report['mc']['t_eps']}")
            return EXIT_OK
        report = cmd_verify(config, args.scale, out,
                            progress=lambda r: print(f"{r.summary()} [{r.elapsed:.1f}s]", flush=True))
        return EXIT_OK if report["passed"] else EXIT_FAIL
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
