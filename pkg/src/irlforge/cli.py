"""Command-line entry point: every test, simulator, and sampler behind one
binary with seeded runs, machine-readable outputs, and a manifest written
next to every artifact.

Exit codes: 0 positive verdict / success, 3 negative test verdict,
1 usage or IO error, 2 numeric failure or undecided.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, dataio, plots
from .birl import (
    brp_feasible,
    inverse_quickest,
    inverse_search,
    inverse_sht,
    logit_mle,
    make_behavior_dataset,
    make_choice_data,
    make_quickest_dataset,
    make_search_dataset,
    make_sht_dataset,
)
from .detect import (
    MCalibration,
    _m_statistic,
    _probe_hash,
    detect as run_detect,
    gaussian_noise,
    make_noisy_dataset,
    random_split_scenario,
    spsa_probe_opt,
    test_statistic,
    uniform_noise,
)
from .errors import IrlForgeError
from .invfilter import (
    AdversaryModel,
    InverseKfModel,
    initial_hmm_state,
    initial_kf_state,
    inverse_hmm_step,
    inverse_kf_step,
    threshold_action_model,
    uninformative_action_model,
)
from .langevin import (
    GaussianInit,
    GradientTrace,
    LangevinConfig,
    SwarmConfig,
    cmdp_experiment,
    histogram_density,
    kl_experiment,
    quadratic_oracle,
    run_forward_agents,
    run_sampler,
)
from .multiagent import make_aggregate_dataset, make_multiagent_dataset, nash_potential_test, pareto_test
from .rp import (
    PiecewiseUtility,
    afriat_certificate,
    canonical_certificate,
    check_garp,
    feasibility_margin,
    mask_responses,
    predict_member,
    rationality_indices,
)
from .sim import CES, CobbDouglas, SpectralScenario, gen_waveform_dataset, kinematic_state_matrix

log = logging.getLogger("irlforge")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_NEGATIVE = 3


class _JsonLineHandler(logging.StreamHandler):
    def emit(self, record):
        try:
            doc = {"level": record.levelname.lower(), "msg": record.getMessage()}
            self.stream.write(json.dumps(doc) + "\n")
            self.flush()
        except Exception:  # pragma: no cover
            self.handleError(record)


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("IRL_FORGE_LOG", "error").lower(), logging.ERROR
    )
    handler = _JsonLineHandler(sys.stderr)
    log.handlers.clear()
    log.addHandler(handler)
    log.setLevel(level)


def _parse_utility(spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "cobb":
        return CobbDouglas([float(v) for v in rest.split(",")])
    if kind == "ces":
        parts = rest.split(",")
        return CES([float(v) for v in parts[:-1]], rho=float(parts[-1]))
    raise ValueError(f"unknown utility {spec!r} (use cobb:g1,g2[,..] or ces:w1,w2,rho)")


def _parse_noise(spec: str):
    kind, _, rest = spec.partition(":")
    params = dict(p.split("=") for p in rest.split(",") if p)
    if kind == "gauss":
        return gaussian_noise(float(params["sigma"]))
    if kind == "uniform":
        return uniform_noise(float(params["half"]))
    raise ValueError(f"unknown noise model {spec!r} (use gauss:sigma=S or uniform:half=H)")


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, name: str, doc: dict, exit_code: int) -> int:
    out = _out_dir(args)
    dataio.write_json(out / f"{name}.json", doc)
    dataio.write_manifest(out, name, {k: v for k, v in vars(args).items() if k != "func"}, __version__)
    print(json.dumps({"output": str(out / f'{name}.json')}))
    return exit_code


def _labels(n):
    return list(range(1, n + 1))


# --------------------------------------------------------------------------- commands


def cmd_garp(args) -> int:
    ds = dataio.read_budget_csv(args.input)
    rep = check_garp(ds)
    doc = {
        "consistent": bool(rep.consistent),
        "violating_cycle": [int(i) + 1 for i in rep.violating_cycle],
        "a_matrix": rep.a_matrix,
    }
    return _finish(args, "garp", doc, EXIT_OK if rep.consistent else EXIT_NEGATIVE)


def cmd_afriat(args) -> int:
    ds = dataio.read_budget_csv(args.input)
    cert = afriat_certificate(ds)
    if cert is None:
        return _finish(args, "afriat", {"rationalizable": False}, EXIT_NEGATIVE)
    margin = feasibility_margin(ds, cert)
    doc = {"rationalizable": True, "phi": cert.phi, "lambda": cert.lam, "margin": margin}
    return _finish(args, "afriat", doc, EXIT_OK)


def cmd_predict(args) -> int:
    ds = dataio.read_budget_csv(args.input)
    member = predict_member(ds, _parse_vector(args.alpha_new), _parse_vector(args.beta_candidate))
    return _finish(args, "predict", {"member": bool(member)}, EXIT_OK if member else EXIT_NEGATIVE)


def cmd_mask(args) -> int:
    ds = dataio.read_budget_csv(args.input)
    util = _parse_utility(args.utility)
    cert = canonical_certificate(ds, util, util.grad)
    base_margin = feasibility_margin(ds, cert)
    masked, achieved = mask_responses(ds, util, args.eta, iters=args.iters, grad=util.grad)
    out = _out_dir(args)
    dataio.write_budget_csv(out / "masked.csv", ds.alpha, masked)
    figures = []
    if args.figures:
        figures.append(plots.render_masking(ds.beta, masked, out / "mask.png"))
    doc = {
        "eta": args.eta,
        "margin_before": base_margin,
        "margin_after": achieved,
        "utility_sacrifice": float(
            sum(util(b) for b in ds.beta) - sum(util(b) for b in masked)
        ),
        "figures": figures,
    }
    return _finish(args, "mask", doc, EXIT_OK)


def cmd_indices(args) -> int:
    ds = dataio.read_budget_csv(args.input)
    idx = rationality_indices(ds, exact_limit=args.exact_limit)
    doc = {
        "hmi": idx.hmi,
        "afriat_index": idx.afriat_index,
        "varian_lower_bound": idx.varian_lower_bound,
        "mci": idx.mci,
    }
    return _finish(args, "indices", doc, EXIT_OK)


def cmd_pareto(args) -> int:
    alpha, beta, lower = dataio.read_multiagent_csv(args.input)
    if lower is None:
        total = beta.sum(axis=0)
        lower = np.zeros_like(beta)
    else:
        total = beta.sum(axis=0)
    ds = make_aggregate_dataset(alpha, total, lower)
    res = pareto_test(ds, node_budget=args.node_budget)
    doc = {"status": res.status}
    if res.status == "coordinated":
        out = _out_dir(args)
        dataio.write_multiagent_csv(out / "personalized.csv", alpha, res.personalized)
        doc["certificates"] = [
            {"phi": c.phi, "lambda": c.lam} for c in res.certificates
        ]
        return _finish(args, "pareto", doc, EXIT_OK)
    if res.status == "not_coordinated":
        return _finish(args, "pareto", doc, EXIT_NEGATIVE)
    return _finish(args, "pareto", doc, EXIT_NUMERIC)


def cmd_nash(args) -> int:
    alpha, beta, _ = dataio.read_multiagent_csv(args.input)
    res = nash_potential_test(make_multiagent_dataset(alpha, beta))
    if res is None:
        return _finish(args, "nash", {"nash_rational": False}, EXIT_NEGATIVE)
    doc = {
        "nash_rational": True,
        "phi": res.certificate.phi,
        "lambda": res.certificate.lam,
    }
    return _finish(args, "nash", doc, EXIT_OK)


def _cal_chunk(payload):
    noise_spec, probes_list, seed, lo, hi = payload
    noise = _parse_noise(noise_spec)
    probes = np.asarray(probes_list)
    out = np.empty(hi - lo)
    for i, l in enumerate(range(lo, hi)):
        rng = np.random.default_rng([l, seed])
        out[i] = _m_statistic(probes, noise.draw(rng, probes.shape))
    return out


def calibrate_m_parallel(noise_spec: str, probes: np.ndarray, trials: int, seed: int, jobs: int) -> MCalibration:
    """Job-count-independent calibration: per-trial seeds, sorted merge."""
    noise = _parse_noise(noise_spec)
    if jobs <= 1:
        from .detect import calibrate_m

        return calibrate_m(noise, probes, trials, seed)
    bounds = np.linspace(0, trials, jobs + 1, dtype=int)
    payloads = [
        (noise_spec, probes.tolist(), seed, int(lo), int(hi))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_cal_chunk, payloads))
    samples = np.sort(np.concatenate(parts))
    return MCalibration(samples, trials, _probe_hash(probes), noise.tag)


def cmd_detect(args) -> int:
    alpha, beta_obs = dataio.read_probe_response_csv(args.input)
    cal = calibrate_m_parallel(args.noise, alpha, args.trials, args.seed, args.jobs)
    rep = run_detect(make_noisy_dataset(alpha, beta_obs), cal, args.gamma)
    out = _out_dir(args)
    figures = []
    if args.figures:
        figures.append(
            plots.render_calibration(cal.samples, rep.t_star, rep.p_value, out / "detect.png")
        )
    doc = {"verdict": rep.verdict, "T_star": rep.t_star, "p_value": rep.p_value, "figures": figures}
    return _finish(args, "detect", doc, EXIT_OK if rep.verdict == "H0" else EXIT_NEGATIVE)


def cmd_spsa(args) -> int:
    if args.input:
        alpha, _ = dataio.read_probe_response_csv(args.input)
    else:
        rng = np.random.default_rng(args.seed)
        alpha = rng.uniform(0.5, 2.0, size=(args.n_obs, args.goods))
    noise = _parse_noise(args.noise)
    res = spsa_probe_opt(
        alpha,
        random_split_scenario(),
        noise,
        gamma=args.gamma,
        iters=args.iters,
        step_omega=args.omega,
        mu_schedule=lambda i: args.mu0 / (i + 1),
        seed=args.seed,
        n_trials=args.trials,
        cal_draws=args.cal_draws,
    )
    out = _out_dir(args)
    dataio.write_budget_csv(out / "probes.csv", res.probes, np.zeros_like(res.probes))
    figures = []
    if args.figures:
        figures.append(plots.render_trace(res.type2_trace, "empirical Type-II error", out / "spsa.png"))
    doc = {"type2_trace": res.type2_trace, "figures": figures}
    return _finish(args, "spsa", doc, EXIT_OK)


def cmd_brp(args) -> int:
    prior, kernels = dataio.read_behavior_json(args.input)
    ds = make_behavior_dataset(prior, kernels)
    cert = brp_feasible(ds, mode=args.mode, margin=args.margin)
    if cert is None:
        return _finish(args, "brp", {"umri": False}, EXIT_NEGATIVE)
    doc = {"umri": True, "values": cert.values, "z": cert.z, "mode": cert.mode}
    return _finish(args, "brp", doc, EXIT_OK)


def cmd_inv_sht(args) -> int:
    prior, kernels = dataio.read_behavior_json(args.input)
    ds = make_sht_dataset(make_behavior_dataset(prior, kernels), _parse_vector(args.continue_costs))
    costs = inverse_sht(ds, margin=args.margin)
    if costs is None:
        return _finish(args, "inv-sht", {"optimal": False}, EXIT_NEGATIVE)
    return _finish(args, "inv-sht", {"optimal": True, "misclassification_costs": costs}, EXIT_OK)


def cmd_inv_search(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        doc_in = json.load(fh)
    ds = make_search_dataset(
        np.asarray(doc_in["prior"], dtype=float),
        np.stack([np.asarray(env["g_a_given_x"], dtype=float) for env in doc_in["envs"]]),
    )
    costs = inverse_search(ds)
    if costs is None:
        return _finish(args, "inv-search", {"optimal": False}, EXIT_NEGATIVE)
    return _finish(args, "inv-search", {"optimal": True, "search_costs": costs}, EXIT_OK)


def cmd_inv_quickest(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        doc_in = json.load(fh)
    ds = make_quickest_dataset(
        np.asarray(doc_in["change_prior"], dtype=float),
        np.stack([np.asarray(env["p_tau_given_tau0"], dtype=float) for env in doc_in["envs"]]),
    )
    pens = inverse_quickest(ds)
    if pens is None:
        return _finish(args, "inv-quickest", {"optimal": False}, EXIT_NEGATIVE)
    return _finish(args, "inv-quickest", {"optimal": True, "false_alarm_penalties": pens}, EXIT_OK)


def cmd_logit(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        doc_in = json.load(fh)
    data = make_choice_data(
        np.asarray(doc_in["attributes"], dtype=float),
        np.asarray(doc_in["freqs"], dtype=float),
        np.asarray(doc_in["weights"], dtype=float) if "weights" in doc_in else None,
    )
    theta = logit_mle(data, iters=args.iters, lr=args.lr)
    return _finish(args, "logit", {"theta": theta}, EXIT_OK)


def _parse_action_model(spec: str):
    kind, _, rest = spec.partition(":")
    params = dict(p.split("=") for p in rest.split(",") if p)
    if kind == "threshold":
        return threshold_action_model(
            int(params.get("coord", 0)), float(params.get("thresh", 0.5)),
            float(params.get("slip", 0.0)), int(params.get("actions", 2)),
        )
    if kind == "uniform":
        return uninformative_action_model(int(params.get("actions", 2)))
    raise ValueError(f"unknown action model {spec!r}")


def cmd_inv_hmm(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        m = json.load(fh)
    model = AdversaryModel(
        np.asarray(m["transition"], dtype=float),
        np.asarray(m["likelihood"], dtype=float),
        _parse_action_model(m.get("action_model", "threshold:coord=0,thresh=0.5")),
    )
    xs, acts = dataio.read_trajectory_csv(args.input)
    state = initial_hmm_state(np.asarray(m["prior"], dtype=float))
    means = []
    for x, a in zip(xs, acts):
        state, pi_hat = inverse_hmm_step(state, model, int(x), int(a), prune=not args.no_prune)
        means.append(pi_hat)
    doc = {
        "belief_means": np.asarray(means),
        "final_atoms": state.atoms,
        "final_weights": state.weights,
    }
    return _finish(args, "inv-hmm", doc, EXIT_OK)


def cmd_inv_kf(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        m = json.load(fh)
    model = InverseKfModel(
        np.asarray(m["A"], dtype=float),
        np.asarray(m["C"], dtype=float),
        np.asarray(m["Q"], dtype=float),
        np.asarray(m["R"], dtype=float),
        phi=lambda cov: np.eye(cov.shape[0]),
        sigma_eps=float(m["sigma_eps"]),
    )
    theta, acts = dataio.read_trace_csv(args.input)  # columns reused: theta=x rows, grad=a rows
    n = model.a.shape[0]
    state = initial_kf_state(model, np.zeros(n), np.eye(n), np.eye(n))
    means, covs = [], []
    for k in range(theta.shape[0]):
        state = inverse_kf_step(state, model, theta[k], acts[k])
        means.append(state.mean.copy())
        covs.append(state.cov.copy())
    return _finish(args, "inv-kf", {"means": np.asarray(means), "covariances": np.asarray(covs)}, EXIT_OK)


def cmd_agents(args) -> int:
    oracle = quadratic_oracle(args.dim, curvature=args.curvature, noise=args.grad_noise)
    init = GaussianInit(np.zeros(args.dim), np.ones(args.dim))
    swarm = SwarmConfig(init, args.eps, args.tau_min, args.tau_max, args.n_agents)
    trace = run_forward_agents(oracle, swarm, args.seed)
    out = _out_dir(args)
    dataio.write_trace_csv(out / "trace.csv", trace.theta, trace.grad)
    figures = []
    if args.figures and args.dim >= 2:
        sub = trace.theta[:: max(1, len(trace) // 20000)]
        from .langevin.samplers import SampleCloud

        figures.append(plots.render_cloud(SampleCloud(sub, 0, "trace").samples, out / "agents.png", "forward trace"))
    return _finish(args, "agents", {"rows": len(trace), "figures": figures}, EXIT_OK)


def cmd_langevin(args) -> int:
    theta, grad = dataio.read_trace_csv(args.trace)
    trace = GradientTrace(theta, grad)
    init = None
    if args.pi_var is not None:
        dim = theta.shape[1]
        init = GaussianInit(np.zeros(dim), np.full(dim, args.pi_var))
    cfg = LangevinConfig(
        variant=args.variant,
        mu=args.mu,
        delta=args.delta,
        beta=args.beta,
        pool_size=args.pool,
        proposal_sigma=args.sigma,
        thin=args.thin,
    )
    cloud = run_sampler(trace, cfg, init_density=init, seed=args.seed)
    out = _out_dir(args)
    dataio.write_cloud_csv(out / "cloud.csv", cloud.samples)
    dens, edges = histogram_density(cloud)
    dataio.write_density_csv(out / "density.csv", edges, dens)
    figures = []
    if args.figures:
        figures.append(plots.render_cloud(cloud.samples, out / "langevin.png", f"{args.variant} samples"))
    doc = {"kept_samples": int(cloud.samples.shape[0]), "burn_in": cloud.burn_in, "figures": figures}
    return _finish(args, "langevin", doc, EXIT_OK)


def cmd_kl_exp(args) -> int:
    rep = kl_experiment(
        seed=args.seed,
        trace_len=args.trace_len,
        mode=args.mode,
        variant=args.variant,
        mu=args.mu,
    )
    out = _out_dir(args)
    figures = []
    if args.figures:
        figures.append(plots.render_cloud(rep.passive_samples, out / "kl_passive.png", "passive sampler"))
        figures.append(
            plots.render_marginal_comparison(
                rep.passive_samples, rep.baseline_samples, ("passive", "classical"), out / "kl_marginals.png"
            )
        )
    dataio.write_cloud_csv(out / "passive_cloud.csv", rep.passive_samples[:: max(1, len(rep.passive_samples) // 100000)])
    doc = {
        "modes": rep.modes,
        "d_marginals_vs_classical": rep.d_marginals,
        "d_classical_vs_oracle": rep.d_classical_vs_oracle,
        "d_passive_vs_oracle": rep.d_passive_vs_oracle,
        "figures": figures,
    }
    return _finish(args, "kl-exp", doc, EXIT_OK)


def cmd_cmdp_exp(args) -> int:
    rep = cmdp_experiment(seed=args.seed, iters=args.iters, mu=args.mu, beta=args.beta)
    out = _out_dir(args)
    edges = [np.concatenate([[0.0], 0.5 * (rep.grid_axis[1:] + rep.grid_axis[:-1]), [1.0]])] * 2
    dataio.write_density_csv(out / "reward_grid.csv", edges, rep.reward_grid)
    figures = []
    if args.figures:
        figures.append(
            plots.render_grid(
                rep.reward_grid, rep.grid_axis, out / "cmdp_reward.png",
                "log empirical density", band=(rep.b_grid, 1.0, 0.05),
            )
        )
        figures.append(plots.render_grid(rep.j_grid, rep.grid_axis, out / "cmdp_truth.png", "exact J"))
    doc = {"overlap": rep.overlap, "figures": figures}
    return _finish(args, "cmdp-exp", doc, EXIT_OK)


def cmd_simulate(args) -> int:
    util = _parse_utility(args.utility)
    scn = SpectralScenario(kinematic_state_matrix()[: args.goods, : args.goods], np.eye(args.goods))
    ds, _ = gen_waveform_dataset(scn, util, args.n_obs, args.seed, m=args.goods)
    out = _out_dir(args)
    dataio.write_budget_csv(out / "dataset.csv", ds.alpha, ds.beta)
    return _finish(args, "simulate", {"n": ds.n, "m": ds.m}, EXIT_OK)


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irlforge", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_seed=False, figures=False):
        p = sub.add_parser(name)
        p.add_argument("--out", default=".", help="output directory")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None)
        if figures:
            p.add_argument("--figures", dest="figures", action="store_true", default=True)
            p.add_argument("--no-figures", dest="figures", action="store_false")
        p.set_defaults(func=fn, needs_seed=needs_seed)
        return p

    p = add("garp", cmd_garp)
    p.add_argument("--input", required=True)

    p = add("afriat", cmd_afriat)
    p.add_argument("--input", required=True)

    p = add("predict", cmd_predict)
    p.add_argument("--input", required=True)
    p.add_argument("--alpha-new", required=True)
    p.add_argument("--beta-candidate", required=True)

    p = add("mask", cmd_mask, figures=True)
    p.add_argument("--input", required=True)
    p.add_argument("--utility", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--iters", type=int, default=120)

    p = add("indices", cmd_indices)
    p.add_argument("--input", required=True)
    p.add_argument("--exact-limit", type=int, default=12)

    p = add("pareto", cmd_pareto)
    p.add_argument("--input", required=True)
    p.add_argument("--node-budget", type=int, default=50_000)

    p = add("nash", cmd_nash)
    p.add_argument("--input", required=True)

    p = add("detect", cmd_detect, needs_seed=True, figures=True)
    p.add_argument("--input", required=True)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--noise", default="gauss:sigma=0.1")
    p.add_argument("--jobs", type=int, default=1)

    p = add("spsa", cmd_spsa, needs_seed=True, figures=True)
    p.add_argument("--input", default=None)
    p.add_argument("--n-obs", type=int, default=4)
    p.add_argument("--goods", type=int, default=2)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--omega", type=float, default=0.05)
    p.add_argument("--mu0", type=float, default=0.2)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--cal-draws", type=int, default=150)
    p.add_argument("--noise", default="gauss:sigma=0.1")

    p = add("brp", cmd_brp)
    p.add_argument("--input", required=True)
    p.add_argument("--margin", type=float, default=1e-6)
    p.add_argument("--mode", choices=("max", "min"), default="max")

    p = add("inv-sht", cmd_inv_sht)
    p.add_argument("--input", required=True)
    p.add_argument("--continue-costs", required=True)
    p.add_argument("--margin", type=float, default=0.0)

    p = add("inv-search", cmd_inv_search)
    p.add_argument("--input", required=True)

    p = add("inv-quickest", cmd_inv_quickest)
    p.add_argument("--input", required=True)

    p = add("logit", cmd_logit)
    p.add_argument("--input", required=True)
    p.add_argument("--iters", type=int, default=3000)
    p.add_argument("--lr", type=float, default=0.5)

    p = add("inv-hmm", cmd_inv_hmm)
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--no-prune", action="store_true")

    p = add("inv-kf", cmd_inv_kf)
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)

    p = add("agents", cmd_agents, needs_seed=True, figures=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--curvature", type=float, default=1.0)
    p.add_argument("--grad-noise", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--tau-min", type=int, default=5)
    p.add_argument("--tau-max", type=int, default=20)
    p.add_argument("--n-agents", type=int, default=1000)

    p = add("langevin", cmd_langevin, needs_seed=True, figures=True)
    p.add_argument("action", choices=("run",))
    p.add_argument("--trace", required=True)
    p.add_argument("--variant", default="generalized")
    p.add_argument("--mu", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--L", dest="pool", type=int, default=50)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--pi-var", type=float, default=1.0)

    p = add("kl-exp", cmd_kl_exp, needs_seed=True, figures=True)
    p.add_argument("--trace-len", type=int, default=1_000_000)
    p.add_argument("--mode", choices=("stochastic", "fixed_path"), default="stochastic")
    p.add_argument("--variant", default="classical_passive")
    p.add_argument("--mu", type=float, default=5e-4)

    p = add("cmdp-exp", cmd_cmdp_exp, needs_seed=True, figures=True)
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--mu", type=float, default=5e-6)
    p.add_argument("--beta", type=float, default=0.05)

    p = add("simulate", cmd_simulate, needs_seed=True)
    p.add_argument("--kind", choices=("waveform",), default="waveform")
    p.add_argument("--utility", default="cobb:0.5,0.5")
    p.add_argument("--n-obs", type=int, default=20)
    p.add_argument("--goods", type=int, default=2)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if getattr(args, "needs_seed", False) and args.seed is None:
        log.error("this subcommand is stochastic: --seed is required")
        print("error: --seed is required for stochastic subcommands", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        log.error("usage/io error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IrlForgeError as exc:
        log.error("numeric failure: %s", exc)
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
