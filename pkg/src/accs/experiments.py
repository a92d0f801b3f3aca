"""Monte Carlo experiment drivers.

Every random quantity is drawn from a ``numpy.random.SeedSequence`` whose
spawn key names what it is for, so results do not depend on scheduling order
or on which other cells are run:

* subspace basis ``B``: ``(0xB,)``; Haar bases are nested across ``k``
* signal ``z`` and pattern ``Omega``: ``(1, k, n, trial)``, shared by all
  coil counts; ``Omega`` is the first ``L`` entries of one random permutation,
  so patterns are nested in ``L`` and both comparisons are paired
* coil coefficients ``H``: ``(2, k, n, C, L, trial)``
* noise: ``(3, k, n, C, L, trial, bits(ratio))``
"""

from __future__ import annotations

import functools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .analysis import certify as certify_operator
from .config import ConfigError, ExperimentConfig
from .liftops import DENSE_LIMIT, LiftedOperator, SubspaceBasis, lift
from .modelgen import (NoiseSpec, _haar, add_noise, coil_sensitivities, gen_coil_coeffs,
                       gen_sampling_pattern, gen_sparse_signal, gen_subspace_basis,
                       synthesize_measurements)
from .retrieval import aligned_relative_error, lifted_relative_error, recover_signal
from .solver import (SolverConfig, fista_l12, lambda_max, omp_known_calibration,
                     solve_with_continuation)
from .transforms import GridShape, SamplingPattern, Sparsifier

logger = logging.getLogger(__name__)

PT_COLUMNS = ["k", "n", "C", "L", "N", "trials", "successes", "success_rate",
              "mean_lifted_relerr", "mean_signal_relerr"]
LS_COLUMNS = ["sweep_var", "sweep_value"] + PT_COLUMNS
LS_MIN_COLUMNS = ["sweep_var", "sweep_value", "k", "n", "C", "min_L"]
CS_COLUMNS = ["C", "L", "noise_ratio", "mean_relerr", "stderr"]
TRIAL_COLUMNS = ["k", "n", "C", "L", "N", "trial", "seed", "noise_ratio", "lam",
                 "lifted_relerr", "signal_relerr", "success", "iterations", "wall_time"]
CERT_COLUMNS = ["trial", "seed", "delta", "beta", "eta", "theta", "tau_times_sqrt_s", "rho",
                "verdict", "certificate_norm_bound", "lifted_relerr", "success"]

_TAG_BASIS, _TAG_SIGNAL, _TAG_COIL, _TAG_NOISE = 0xB, 1, 2, 3


def seed_sequence(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(int(v) for v in key))


def derived_seed(ss: np.random.SeedSequence) -> int:
    """64-bit summary of a seed sequence, recorded per trial."""
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _float_bits(x: float) -> int:
    return int(np.float64(x).view(np.uint64))


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Instance:
    op: LiftedOperator
    Y: np.ndarray
    X0: np.ndarray
    z: np.ndarray
    H: np.ndarray
    noise_norm: float
    seed: int


@functools.lru_cache(maxsize=64)
def _haar_prefix(master: int, N: int, kmax: int) -> np.ndarray:
    return _haar(N, kmax, np.random.default_rng(seed_sequence(master, _TAG_BASIS)))


def subspace_basis(cfg: ExperimentConfig, k: int, shape: GridShape | None = None) -> SubspaceBasis:
    """Coil basis for ``k``; Haar bases are the first ``k`` columns of one draw."""
    shape = shape or GridShape(cfg.n1, cfg.n2)
    if cfg.basis == "haar":
        # draw at least 16 columns so that small k values share one cached draw
        Q = _haar_prefix(cfg.seed, shape.N, max(k, min(16, shape.N - 1)))
        return SubspaceBasis(Q[:, :k])
    return gen_subspace_basis(cfg.basis, shape, k)


def make_instance(cfg: ExperimentConfig, k: int, n: int, C: int, L: int, trial: int,
                  noise_ratio: float = 0.0) -> Instance:
    """One random problem of the experiment family described by ``cfg``."""
    shape = GridShape(cfg.n1, cfg.n2)
    N = shape.N
    psi = Sparsifier(cfg.sparsifier, shape)
    B = subspace_basis(cfg, k, shape)
    rng = np.random.default_rng(seed_sequence(cfg.seed, _TAG_SIGNAL, k, n, trial))
    sig = gen_sparse_signal(N, n, rng, cfg.value_model)
    omega = gen_sampling_pattern(N, L, rng)
    coil_ss = seed_sequence(cfg.seed, _TAG_COIL, k, n, C, L, trial)
    H = gen_coil_coeffs(cfg.coil_model, k, C, np.random.default_rng(coil_ss)).H
    meas = synthesize_measurements(B, H, sig, psi, omega)
    if noise_ratio > 0:
        nss = seed_sequence(cfg.seed, _TAG_NOISE, k, n, C, L, trial, _float_bits(noise_ratio))
        meas = add_noise(meas, NoiseSpec(noise_ratio, np.random.default_rng(nss)))
    op = LiftedOperator(B, psi, omega)
    return Instance(op, meas.Y, lift(sig.z, H), sig.z, H, meas.noise_norm, derived_seed(coil_ss))


# ---------------------------------------------------------------------------
# solving


@dataclass
class LambdaPath:
    """Solutions along a decreasing ``lam`` grid and the selected index."""

    lams: list[float]
    X: list[np.ndarray]
    residuals: list[float]
    iterations: list[int]
    selected: int = 0
    errors: list[float] = field(default_factory=list)


def solve_lambda_grid(op: LiftedOperator, Y: np.ndarray, fractions, cfg: SolverConfig,
                      noise_norm: float = 0.0, select: str = "discrepancy",
                      X_true: np.ndarray | None = None) -> LambdaPath:
    """Warm-started FISTA over ``lam = f * lambda_max`` for each fraction (largest first).

    ``select="discrepancy"`` picks the ``lam`` whose residual is closest to
    ``noise_norm``; ``select="oracle"`` picks the smallest lifted error against
    ``X_true``.
    """
    fr = sorted((float(f) for f in fractions), reverse=True)
    if not fr or fr[-1] <= 0:
        raise ValueError("lambda fractions must be positive")
    lmax = lambda_max(op, Y, cfg.regularizer)
    X = None
    path = LambdaPath([], [], [], [])
    for f in fr:
        res = fista_l12(op, Y, f * lmax, cfg, X0=X)
        X = res.X
        path.lams.append(f * lmax)
        path.X.append(X)
        path.residuals.append(res.residual)
        path.iterations.append(res.iterations)
    if X_true is not None:
        path.errors = [lifted_relative_error(Xl, X_true) for Xl in path.X]
    if select == "oracle":
        if X_true is None:
            raise ValueError("oracle selection needs the true lifted matrix")
        path.selected = int(np.argmin(path.errors))
    elif select == "discrepancy":
        path.selected = int(np.argmin([abs(r - noise_norm) for r in path.residuals]))
    else:
        raise ValueError(f"unknown lambda selection {select!r}")
    return path


@dataclass
class TrialRecord:
    k: int
    n: int
    C: int
    L: int
    N: int
    trial: int
    seed: int
    noise_ratio: float
    lam: float
    lifted_relerr: float
    signal_relerr: float
    success: bool
    iterations: int
    wall_time: float


def success_threshold(cfg: ExperimentConfig, noise_ratio: float) -> float:
    """``cfg.success_threshold`` when noiseless, else ``noise_success_factor * ratio``."""
    if noise_ratio > 0:
        return cfg.noise_success_factor * noise_ratio
    return cfg.success_threshold


def run_trial(cfg: ExperimentConfig, k: int, n: int, C: int, L: int, trial: int,
              noise_ratio: float = 0.0) -> TrialRecord:
    """Generate, solve and score one instance."""
    t0 = time.perf_counter()
    inst = make_instance(cfg, k, n, C, L, trial, noise_ratio)
    scfg = cfg.solver_config()
    if noise_ratio > 0:
        path = solve_lambda_grid(inst.op, inst.Y, cfg.lambda_grid, scfg, inst.noise_norm,
                                 cfg.lambda_select, inst.X0)
        X = path.X[path.selected]
        lam = path.lams[path.selected]
        iters = int(sum(path.iterations))
    else:
        res = solve_with_continuation(inst.op, inst.Y, scfg)
        X, lam, iters = res.X, res.lambdas[-1], res.iterations
    err = lifted_relative_error(X, inst.X0)
    if np.any(X):
        serr = aligned_relative_error(recover_signal(X, inst.op.psi, k).z, inst.z)
    else:
        serr = 1.0
    return TrialRecord(k, n, C, L, inst.op.N, trial, inst.seed, float(noise_ratio), float(lam),
                       err, serr, bool(err <= success_threshold(cfg, noise_ratio)), iters,
                       time.perf_counter() - t0)


def _trial_job(args) -> TrialRecord:
    cfg, k, n, C, L, trial, ratio = args
    return run_trial(cfg, k, n, C, L, trial, ratio)


def _map(fn, jobs: list, threads: int) -> list:
    """Run ``fn`` over ``jobs`` serially or in a process pool; results keep job order."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    workers = min(threads, len(jobs))
    chunk = max(1, len(jobs) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def run_trials(cfg: ExperimentConfig, cells, noise_ratio: float = 0.0) -> list[TrialRecord]:
    """All trials of the ``(k, n, C, L)`` cells, sorted by (cell, trial)."""
    jobs = [(cfg, k, n, C, L, t, noise_ratio) for (k, n, C, L) in cells for t in range(cfg.trials)]
    recs = _map(_trial_job, jobs, cfg.threads)
    return sorted(recs, key=lambda r: (r.k, r.n, r.C, r.L, r.trial))


def _feasible(cfg: ExperimentConfig, k: int, n: int, L: int) -> bool:
    return k < cfg.N and n <= cfg.N and L <= cfg.N


def _cell_row(k, n, C, L, N, recs: list[TrialRecord]) -> dict:
    if not recs:
        return dict(k=k, n=n, C=C, L=L, N=N, trials=0, successes=0, success_rate=math.nan,
                    mean_lifted_relerr=math.nan, mean_signal_relerr=math.nan)
    s = sum(r.success for r in recs)
    return dict(k=k, n=n, C=C, L=L, N=N, trials=len(recs), successes=s,
                success_rate=s / len(recs),
                mean_lifted_relerr=float(np.mean([r.lifted_relerr for r in recs])),
                mean_signal_relerr=float(np.mean([r.signal_relerr for r in recs])))


def _group(recs: list[TrialRecord]) -> dict:
    out: dict = {}
    for r in recs:
        out.setdefault((r.k, r.n, r.C, r.L), []).append(r)
    return out


def _single_noise(cfg: ExperimentConfig) -> float:
    if len(cfg.noise_ratio) != 1:
        raise ConfigError(f"{cfg.experiment} takes a single noise_ratio value")
    return cfg.noise_ratio[0]


def _out_path(out_dir, name: str) -> Path | None:
    if out_dir is None:
        return None
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _write_trials(out_dir, name: str, recs: list[TrialRecord]) -> None:
    p = _out_path(out_dir, name)
    if p is not None:
        io.write_csv(p, TRIAL_COLUMNS, [asdict(r) for r in recs])


@dataclass
class ExperimentResult:
    rows: list[dict]
    trials: list[TrialRecord] = field(default_factory=list)
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# experiments


def run_phase_transition(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Success rate for every ``(k, n, C, L)`` cell of the configured grid."""
    ratio = _single_noise(cfg)
    cells, rows = [], []
    for C in cfg.C:
        for L in cfg.L:
            for k in cfg.k:
                for n in cfg.n:
                    if _feasible(cfg, k, n, L):
                        cells.append((k, n, C, L))
                    else:
                        logger.warning("skipping infeasible cell k=%d n=%d L=%d (N=%d)",
                                       k, n, L, cfg.N)
    recs = run_trials(cfg, cells, ratio)
    by = _group(recs)
    for C in cfg.C:
        for L in cfg.L:
            for k in cfg.k:
                for n in cfg.n:
                    rows.append(_cell_row(k, n, C, L, cfg.N, by.get((k, n, C, L), [])))
    name = cfg.csv_name or "phase_transition.csv"
    p = _out_path(out_dir, name)
    if p is not None:
        io.write_csv(p, PT_COLUMNS, rows)
        _write_trials(out_dir, p.stem + "_trials.csv", recs)
    return ExperimentResult(rows, recs)


def minimal_L(rows: list[dict], target: float) -> int | None:
    """Smallest ``L`` whose success rate reaches ``target`` (rows of one curve)."""
    ok = [r["L"] for r in rows if r["trials"] and r["success_rate"] >= target]
    return min(ok) if ok else None


def run_l_sweep(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Success rate against ``L`` with either ``k`` or ``n`` swept, other fixed.

    ``l_search`` controls which ``L`` values are run per curve: ``full`` runs
    them all; ``scan`` goes up the list and stops at the first ``L`` reaching
    ``success_target``; ``bisect`` binary-searches the list for that ``L``
    (both assume success is monotone in ``L``).
    """
    ratio = _single_noise(cfg)
    if cfg.sweep_var == "k":
        if len(cfg.n) != 1:
            raise ConfigError("sweeping k needs a single n value")
        pairs = [(k, cfg.n[0], k) for k in cfg.k]
    else:
        if len(cfg.k) != 1:
            raise ConfigError("sweeping n needs a single k value")
        pairs = [(cfg.k[0], n, n) for n in cfg.n]
    Ls = sorted(set(cfg.L))
    curves = [(k, n, v, C) for (k, n, v) in pairs for C in cfg.C]
    done: dict = {}  # (k, n, C, L) -> row
    recs_all: list[TrialRecord] = []

    def run_wave(cells):
        feas = [c for c in cells if _feasible(cfg, c[0], c[1], c[3])]
        recs = run_trials(cfg, feas, ratio)
        recs_all.extend(recs)
        by = _group(recs)
        for c in cells:
            done[c] = _cell_row(*c, cfg.N, by.get(c, []))

    def ok(c):
        r = done[c]
        return bool(r["trials"]) and r["success_rate"] >= cfg.success_target

    if cfg.l_search == "full":
        run_wave([(k, n, C, L) for (k, n, _, C) in curves for L in Ls])
    elif cfg.l_search == "scan":
        active = list(curves)
        for L in Ls:
            if not active:
                break
            run_wave([(k, n, C, L) for (k, n, _, C) in active])
            active = [c for c in active if not ok((c[0], c[1], c[3], L))]
    else:  # bisect on the index into Ls
        lo = {c: 0 for c in curves}
        hi = {c: len(Ls) for c in curves}   # Ls[hi] is the best known success (len = none)
        while True:
            pending = {c: (lo[c] + hi[c]) // 2 for c in curves if lo[c] < hi[c]}
            if not pending:
                break
            run_wave([(c[0], c[1], c[3], Ls[m]) for c, m in pending.items()])
            for c, m in pending.items():
                if ok((c[0], c[1], c[3], Ls[m])):
                    hi[c] = m
                else:
                    lo[c] = m + 1
    rows, mins = [], []
    for (k, n, v, C) in curves:
        curve = [done[(k, n, C, L)] for L in Ls if (k, n, C, L) in done]
        for r in curve:
            rows.append({"sweep_var": cfg.sweep_var, "sweep_value": v, **r})
        mins.append({"sweep_var": cfg.sweep_var, "sweep_value": v, "k": k, "n": n, "C": C,
                     "min_L": minimal_L(curve, cfg.success_target)})
    recs_all.sort(key=lambda r: (r.k, r.n, r.C, r.L, r.trial))
    name = cfg.csv_name or "l_sweep.csv"
    p = _out_path(out_dir, name)
    if p is not None:
        io.write_csv(p, LS_COLUMNS, rows)
        io.write_csv(p.with_name(p.stem + "_minimal.csv"), LS_MIN_COLUMNS,
                     [{**m, "min_L": "" if m["min_L"] is None else m["min_L"]} for m in mins])
        _write_trials(out_dir, p.stem + "_trials.csv", recs_all)
    return ExperimentResult(rows, recs_all, {"minimal": mins})


def _coil_job(args) -> tuple:
    cfg, C, L, ratio, real = args
    shape = GridShape(cfg.n1, cfg.n2)
    k, n = cfg.k[0], cfg.n[0]
    psi = Sparsifier(cfg.sparsifier, shape)
    B = subspace_basis(cfg, k, shape)
    # signal and nested pattern per realization, coils fixed per C
    rng = np.random.default_rng(seed_sequence(cfg.seed, _TAG_SIGNAL, k, n, real))
    sig = gen_sparse_signal(shape.N, n, rng, cfg.value_model)
    omega = gen_sampling_pattern(shape.N, L, rng)
    H = gen_coil_coeffs(cfg.coil_model, k, C,
                        np.random.default_rng(seed_sequence(cfg.seed, _TAG_COIL, k, n, C))).H
    meas = synthesize_measurements(B, H, sig, psi, omega)
    if ratio > 0:
        nss = seed_sequence(cfg.seed, _TAG_NOISE, k, n, C, L, real, _float_bits(ratio))
        meas = add_noise(meas, NoiseSpec(ratio, np.random.default_rng(nss)))
    if cfg.mode == "omp":
        zh = omp_known_calibration(coil_sensitivities(B, H), psi, omega, meas.Y, n).z
    else:
        op = LiftedOperator(B, psi, omega)
        X = solve_with_continuation(op, meas.Y, cfg.solver_config()).X
        zh = recover_signal(X, psi, k).z if np.any(X) else np.zeros(shape.N, complex)
    return (C, L, ratio, real, aligned_relative_error(zh, sig.z))


def run_coil_sweep(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Mean aligned signal error over sampling realizations for each ``(C, L, noise)``.

    Each realization (``trials``) draws a signal and a pattern, nested in
    ``L``; the coil coefficients are fixed per ``C``.
    """
    if len(cfg.k) != 1 or len(cfg.n) != 1:
        raise ConfigError("coil_sweep needs single k and n values")
    jobs = [(cfg, C, L, r, t) for r in cfg.noise_ratio for C in cfg.C for L in cfg.L
            if L <= cfg.N for t in range(cfg.trials)]
    out = sorted(_map(_coil_job, jobs, cfg.threads), key=lambda t: t[:4])
    by: dict = {}
    for C, L, r, _, e in out:
        by.setdefault((C, L, r), []).append(e)
    rows = []
    for r in cfg.noise_ratio:
        for C in cfg.C:
            for L in cfg.L:
                e = np.asarray(by.get((C, L, r), []))
                se = float(e.std(ddof=1) / np.sqrt(e.size)) if e.size > 1 else 0.0
                rows.append(dict(C=C, L=L, noise_ratio=r,
                                 mean_relerr=float(e.mean()) if e.size else math.nan, stderr=se))
    p = _out_path(out_dir, cfg.csv_name or "coil_sweep.csv")
    if p is not None:
        io.write_csv(p, CS_COLUMNS, rows)
    return ExperimentResult(rows)


def run_certify(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Dense certificate reports for ``trials`` random instances; certified ones are solved."""
    k, n, C, L = cfg.k[0], cfg.n[0], cfg.C[0], cfg.L[0]
    if k * cfg.N > DENSE_LIMIT:
        raise ConfigError(f"certify needs k*N <= {DENSE_LIMIT}, got {k * cfg.N}")
    rows, texts = [], []
    for t in range(cfg.trials):
        inst = make_instance(cfg, k, n, C, L, t)
        try:
            _, _, rep = certify_operator(inst.op, inst.X0, cfg.normalized)
        except np.linalg.LinAlgError:
            logger.warning("trial %d: singular support Gram matrix, no certificate", t)
            rows.append(dict(trial=t, seed=inst.seed, delta=math.nan, beta=math.nan, eta=math.nan,
                             theta=math.nan, tau_times_sqrt_s=math.nan, rho=math.nan,
                             verdict=False, certificate_norm_bound=math.nan, lifted_relerr=math.nan,
                             success=False))
            continue
        err = math.nan
        if rep.verdict and cfg.certify_solve:
            X = solve_with_continuation(inst.op, inst.Y, cfg.solver_config()).X
            err = lifted_relative_error(X, inst.X0)
        rows.append(dict(trial=t, seed=inst.seed, delta=rep.delta, beta=rep.beta, eta=rep.eta,
                         theta=rep.theta, tau_times_sqrt_s=rep.tau_times_sqrt_s, rho=rep.rho,
                         verdict=rep.verdict, certificate_norm_bound=rep.certificate_norm_bound, lifted_relerr=err,
                         success=bool(err <= cfg.success_threshold)))
        texts.append(f"trial={t}\nseed={inst.seed}\n" + rep.to_text())
    p = _out_path(out_dir, cfg.csv_name or "certify.csv")
    if p is not None:
        io.write_csv(p, CERT_COLUMNS, rows)
        p.with_name(p.stem + "_report.txt").write_text("\n".join(texts), encoding="utf-8")
    return ExperimentResult(rows)


# ---------------------------------------------------------------------------
# reconstruction


def _is_pgm(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) == b"P5"


def _reconstruct_L(cfg: ExperimentConfig, N: int) -> int:
    if cfg.reduction is not None:
        return max(1, int(math.ceil(N / cfg.reduction)))
    return cfg.L[0]


def run_reconstruct(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Reconstruct one image from a k-space container or a synthetically measured PGM.

    Writes ``reconstruct.pgm`` (magnitude) and ``reconstruct_metrics.txt``;
    a PGM input also produces the simulated ``measured.acsk``.
    """
    if cfg.input is None:
        raise ConfigError("reconstruct needs an 'input' file")
    src = Path(cfg.input)
    k, C = cfg.k[0], cfg.C[0]
    truth = None
    if _is_pgm(src):
        img = io.read_pgm(src)
        shape = GridShape(*img.shape)
        truth = shape.flatten(img).astype(np.complex128)
        psi = Sparsifier(cfg.sparsifier, shape)
        B = subspace_basis(cfg, k, shape)
        L = _reconstruct_L(cfg, shape.N)
        if L > shape.N:
            raise ConfigError(f"L={L} exceeds the image size N={shape.N}")
        rng = np.random.default_rng(seed_sequence(cfg.seed, _TAG_SIGNAL, k, L))
        omega = gen_sampling_pattern(shape.N, L, rng) if L < shape.N else SamplingPattern.full(shape.N)
        H = gen_coil_coeffs(cfg.coil_model, k, C,
                            np.random.default_rng(seed_sequence(cfg.seed, _TAG_COIL, k, C))).H
        meas = synthesize_measurements(B, H, psi.forward(truth), psi, omega)
        ratio = cfg.noise_ratio[0]
        if ratio > 0:
            meas = add_noise(meas, NoiseSpec(ratio, np.random.default_rng(
                seed_sequence(cfg.seed, _TAG_NOISE, k, C, L, _float_bits(ratio)))))
        Y = meas.Y
        p = _out_path(out_dir, "measured.acsk")
        if p is not None:
            io.write_kspace(p, io.KSpaceData(shape, omega, Y, k, B.B))
    else:
        data = io.read_kspace(src)
        shape, omega, Y, k = data.shape, data.omega, data.Y, data.k
        psi = Sparsifier(cfg.sparsifier, shape)
        B = SubspaceBasis(data.B) if data.B is not None else subspace_basis(cfg, k, shape)
        if cfg.truth is not None:
            img = io.read_pgm(cfg.truth)
            if img.shape != (shape.n1, shape.n2):
                raise ConfigError(f"truth image is {img.shape}, k-space grid is "
                                  f"{(shape.n1, shape.n2)}")
            truth = shape.flatten(img).astype(np.complex128)
    op = LiftedOperator(B, psi, omega)
    scfg = cfg.solver_config()
    if cfg.lambda_factor is not None:
        # continue from lambda_max down to the requested fraction
        scfg = SolverConfig(**{**scfg.__dict__, "lambda_min_factor": cfg.lambda_factor})
    t0 = time.perf_counter()
    res = solve_with_continuation(op, Y, scfg)
    wall = time.perf_counter() - t0
    if not np.any(res.X):
        raise RuntimeError("the solver returned zero; lower lambda")
    rec = recover_signal(res.X, psi, k)
    x = rec.x
    metrics = {"N": shape.N, "L": omega.L, "C": Y.shape[1], "k": k,
               "lambda": res.lambdas[-1], "iterations": res.iterations,
               "residual": res.residual,
               "relative_residual": res.residual / float(np.linalg.norm(Y)),
               "used_fallback": rec.used_fallback, "wall_time": wall}
    if truth is not None:
        metrics["relative_error"] = aligned_relative_error(x, truth)
        # fix the global scalar against the truth for display
        x = x * (np.vdot(x, truth) / np.vdot(x, x))
    p = _out_path(out_dir, "reconstruct.pgm")
    if p is not None:
        io.write_pgm(p, shape.unflatten(x))
        io.write_metrics(p.with_name("reconstruct_metrics.txt"), metrics)
    return ExperimentResult([metrics], extra={"x": x, "result": res})


RUNNERS = {
    "phase_transition": run_phase_transition,
    "l_sweep": run_l_sweep,
    "coil_sweep": run_coil_sweep,
    "reconstruct": run_reconstruct,
    "certify": run_certify,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg, out_dir)

