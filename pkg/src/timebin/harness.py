"""End-to-end experiment runs with reproducible reports.

Every run takes an explicit spec, noise model and seed, and its report
header records all three (the circuit through the sha256 of its canonical
serialization). Monte-Carlo items draw from child streams of one
``SeedSequence``; the items are independent, so results merged in suite
order are bit-stable for a given master seed.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .compiler import (
    compile_permutation,
    galton_board,
    galton_input_mode,
    permutation_matrix,
    reconstruct,
)
from .dsl import serialize_circuit
from .elements import (
    CircuitSpec,
    CouplerParams,
    Topology,
    birefringent_shift,
    kerr_layer,
    polarization_rotation,
)
from .photonics import EXPERIMENT_LOSS_DB, NoiseModel, db_to_transmittance, perturb_circuit
from .elements import logical_unitary
from .simulator import (
    detection_matrix,
    distribution_fidelity,
    estimate_detection_matrix,
    fidelity,
    sample_detection_counts,
    sample_counts,
)

DEFAULT_SUITE_SIZES = {2: 2, 3: 6, 4: 24, 5: 82, 6: 82, 7: 83, 8: 83}


def spec_hash(spec: CircuitSpec) -> str:
    return hashlib.sha256(serialize_circuit(spec).encode()).hexdigest()


@dataclass
class Report:
    spec_hash: Optional[str]
    noise: Optional[dict]
    shots: Optional[int]
    seed: Optional[int]
    fidelity: Optional[float]
    matrix: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "spec_hash": self.spec_hash,
            "noise": self.noise,
            "shots": self.shots,
            "seed": self.seed,
            "fidelity": self.fidelity,
            "matrix": None if self.matrix is None else np.asarray(self.matrix).tolist(),
        }
        out.update(_jsonable(self.extra))
        return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


# -- single runs ----------------------------------------------------------------------


def simulate(spec: CircuitSpec, noise: Optional[NoiseModel] = None, shots: Optional[int] = None,
             seed: int = 0, loss_db: float = 0.0, t_hours: float = 0.0,
             basis: Optional[str] = None, rng: Optional[np.random.Generator] = None) -> Report:
    """Perturb, propagate through the padded register, optionally sample, and score
    against the noiseless abstract-mesh target."""
    noise = noise or NoiseModel.noiseless(seed)
    rng = rng if rng is not None else np.random.default_rng(seed)
    P_target = detection_matrix(reconstruct(spec), basis=basis)
    run_spec = spec if noise.is_noiseless else perturb_circuit(spec, noise, t_hours, rng)
    eta = db_to_transmittance(loss_db)
    P = detection_matrix(logical_unitary(run_spec), eta=eta, basis=basis)
    if shots:
        records = sample_detection_counts(P, shots, rng, noise.dark_rate)
        P = estimate_detection_matrix(records)
    return Report(spec_hash(spec), noise.as_dict(), shots, seed, fidelity(P_target, P), P)


# -- theta sweep ----------------------------------------------------------------------


def swap_target(N: int = 4) -> np.ndarray:
    """Transposition of the two middle modes."""
    sigma = list(range(N))
    m = N // 2
    sigma[m - 1], sigma[m] = m, m - 1
    return permutation_matrix(sigma)


def single_coupler(theta: float, phi: float = 0.0, N: int = 4) -> CircuitSpec:
    """One coupler between the middle modes ``(N/2 - 1, N/2)``; layer 1, slot 0 at N=4."""
    a = N // 2 - 1
    return CircuitSpec(N, Topology.RECTANGULAR_MESH, [CouplerParams(theta, phi, a % 2, a // 2)])


def theta_sweep(n_points: int = 33, N: int = 4) -> dict:
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    thetas = np.linspace(0.0, math.pi / 2, n_points)
    eye, swap = np.eye(N), swap_target(N)
    mats, f_id, f_sw = [], [], []
    for th in thetas:
        P = detection_matrix(logical_unitary(single_coupler(float(th), N=N)))
        mats.append(P)
        f_id.append(fidelity(eye, P))
        f_sw.append(fidelity(swap, P))
    return {
        "theta": thetas,
        "matrices": np.array(mats),
        "fidelity_identity": np.array(f_id),
        "fidelity_swap": np.array(f_sw),
    }


# -- permutations ---------------------------------------------------------------------


def embed_permutation(sigma: Sequence[int]) -> list:
    """Odd N rides on an (N+1)-mode mesh with the extra mode fixed."""
    sigma = list(sigma)
    return sigma + [len(sigma)] if len(sigma) % 2 else sigma


def permutation_items(sizes: dict = None, seed: int = 0) -> list:
    """Suite definition: exhaustive where the requested count equals N!, otherwise
    a seed-fixed sample without replacement."""
    sizes = DEFAULT_SUITE_SIZES if sizes is None else sizes
    items = []
    for N in sorted(sizes):
        k = sizes[N]
        total = math.factorial(N)
        if not 1 <= k <= total:
            raise ValueError(f"sample size for N={N} must lie in 1..{total}, got {k}")
        if k == total:
            chosen = [list(p) for p in itertools.permutations(range(N))]
        else:
            rng = np.random.default_rng([seed, N])
            seen, chosen = set(), []
            while len(chosen) < k:
                p = tuple(int(x) for x in rng.permutation(N))
                if p not in seen:
                    seen.add(p)
                    chosen.append(list(p))
        items.extend((N, p) for p in chosen)
    return items


def score_permutation(sigma: Sequence[int], noise: NoiseModel,
                      rng: Optional[np.random.Generator], shots: Optional[int] = None) -> float:
    N = len(sigma)
    spec = compile_permutation(embed_permutation(sigma))
    if not noise.is_noiseless:
        spec = perturb_circuit(spec, noise, 0.0, rng)
    P = detection_matrix(logical_unitary(spec))[:N, :N]
    if shots:
        P = estimate_detection_matrix(sample_detection_counts(P, shots, rng, noise.dark_rate))
    return fidelity(permutation_matrix(sigma), P)


def permutation_suite(sizes: dict = None, noise: Optional[NoiseModel] = None, seed: int = 0,
                      shots: Optional[int] = None, bins: int = 20) -> Report:
    noise = noise or NoiseModel.noiseless(seed)
    items = permutation_items(sizes, seed)
    streams = np.random.SeedSequence(seed).spawn(len(items))
    fids = np.array([
        score_permutation(sigma, noise, np.random.default_rng(s), shots)
        for (N, sigma), s in zip(items, streams)
    ])
    per_n = {}
    for (N, _), f in zip(items, fids):
        per_n.setdefault(N, []).append(f)
    lo = min(0.9, float(fids.min()))
    hist, edges = np.histogram(fids, bins=bins, range=(lo, 1.0))
    extra = {
        "suite": [{"N": N, "sigma": sigma} for N, sigma in items],
        "fidelities": fids,
        "n_items": len(items),
        "mean_fidelity": float(fids.mean()),
        "mean_by_N": {N: float(np.mean(v)) for N, v in per_n.items()},
        "histogram": {"counts": hist, "edges": edges},
    }
    return Report(None, noise.as_dict(), shots, seed, float(fids.mean()), None, extra)


# -- stability ------------------------------------------------------------------------


def stability_run(spec: Optional[CircuitSpec] = None, noise: Optional[NoiseModel] = None,
                  duration_h: float = 108.0, step_h: float = 1.0, shots: Optional[int] = 10_000,
                  seed: int = 0, loss_db: float = 0.0) -> Report:
    """Fidelity time series under the declared noise model."""
    if duration_h <= 0 or step_h <= 0:
        raise ValueError("duration and step must be positive")
    spec = spec if spec is not None else single_coupler(math.pi / 2)
    noise = noise or NoiseModel(seed=seed)
    times = np.arange(0.0, duration_h + 1e-9, step_h)
    streams = np.random.SeedSequence(seed).spawn(len(times))
    series = np.array([
        simulate(spec, noise, shots, seed, loss_db, float(t), rng=np.random.default_rng(s)).fidelity
        for t, s in zip(times, streams)
    ])
    if len(times) >= 3 and np.ptp(series) > 0:
        fit = stats.linregress(times, series)
        tcrit = stats.t.ppf(0.975, len(times) - 2)
        slope, ci = fit.slope, (fit.slope - tcrit * fit.stderr, fit.slope + tcrit * fit.stderr)
    else:
        slope, ci = 0.0, (0.0, 0.0)
    summary = {
        "min": float(series.min()),
        "mean": float(series.mean()),
        "std": float(series.std()),
        "slope_per_h": float(slope),
        "slope_ci95": [float(ci[0]), float(ci[1])],
    }
    extra = {"times_h": times, "series": series, "summary": summary,
             "duration_h": duration_h, "step_h": step_h}
    return Report(spec_hash(spec), noise.as_dict(), shots, seed, summary["mean"], None, extra)


# -- Galton walk ----------------------------------------------------------------------


def galton_oracle_distribution(depth: int, pol: str = "H", theta: float = math.pi / 4) -> np.ndarray:
    """Brute-force register propagation of one photon through the board.

    Builds the POUTINE factors directly from the element matrices, tracks the
    photon amplitude on the padded register and reads the logical modes back
    by their landing positions. Independent of the relabeling machinery.
    """
    spec = galton_board(depth, theta)
    space = spec.mode_space()
    R = polarization_rotation(math.pi / 2, space)
    B = birefringent_shift(space)
    psi = np.zeros(space.dim, dtype=complex)
    start = space.logical_positions(0)[galton_input_mode(depth, pol)]
    psi[start] = 1.0
    for k in range(spec.n_layers):
        psi = R @ (B @ (kerr_layer(k, spec.couplers_in_layer(k), space) @ psi))
    probs = np.abs(psi) ** 2
    return probs[space.logical_positions(spec.n_layers)]


def walk_distribution(depth: int, pol: str = "H", theta: float = math.pi / 4) -> np.ndarray:
    U = logical_unitary(galton_board(depth, theta))
    return np.abs(U[:, galton_input_mode(depth, pol)]) ** 2


def walk_experiment(max_depth: int = 18, theta: float = math.pi / 4, pols=("H", "V"),
                    shots: Optional[int] = None, loss_db: float = EXPERIMENT_LOSS_DB["walk"],
                    seed: int = 0) -> Report:
    if not 1 <= max_depth <= 64:
        raise ValueError("max_depth must lie in 1..64")
    eta = db_to_transmittance(loss_db)
    streams = iter(np.random.SeedSequence(seed).spawn(max_depth * len(pols)))
    depths = []
    for d in range(1, max_depth + 1):
        spec = galton_board(d, theta)
        U = logical_unitary(spec)
        entry = {"depth": d, "n_modes": spec.n_logical, "n_couplers": len(spec.couplers)}
        for pol in pols:
            j = galton_input_mode(d, pol)
            exact = np.abs(U[:, j]) ** 2
            oracle = galton_oracle_distribution(d, pol, theta)
            row = {
                "exact": exact,
                "sum": float(exact.sum()),
                "oracle_max_dev": float(np.abs(exact - oracle).max()),
            }
            rng = np.random.default_rng(next(streams))
            if shots:
                rec = sample_counts((eta * exact)[:, None], 0, shots, rng)
                est = rec.counts / max(rec.detected, 1)
                row.update(counts=rec.counts, detected=rec.detected,
                           fidelity=distribution_fidelity(exact, est) if rec.detected else 0.0)
            else:
                row["fidelity"] = distribution_fidelity(exact, exact)
            entry[pol] = row
        if "H" in entry and "V" in entry:
            entry["tv_distance_HV"] = 0.5 * float(np.abs(entry["H"]["exact"] - entry["V"]["exact"]).sum())
        depths.append(entry)
    fids = [e[p]["fidelity"] for e in depths for p in pols]
    extra = {"theta": theta, "loss_db": loss_db, "depths": depths}
    return Report(spec_hash(galton_board(max_depth, theta)), NoiseModel.noiseless(seed).as_dict(),
                  shots, seed, float(np.mean(fids)), None, extra)


# -- generated corpus -----------------------------------------------------------------


def generated_corpus(seed: int = 0, per_n: int = 3) -> list:
    """Specs from every compiler constructor with N <= 16."""
    from scipy.stats import unitary_group

    from .compiler import hadamard4_recipe, mesh_decompose

    rng = np.random.default_rng(seed)
    specs = [CircuitSpec(N) for N in range(2, 17, 2)]
    specs += [CircuitSpec(N, Topology.GALTON_BOARD) for N in range(2, 17, 2)]
    for N in range(2, 17, 2):
        for _ in range(per_n):
            U = unitary_group.rvs(N, random_state=rng)
            specs.append(mesh_decompose(np.atleast_2d(U)))
            specs.append(compile_permutation(rng.permutation(N)))
    specs.append(hadamard4_recipe())
    specs += [galton_board(d) for d in range(1, 9)]
    specs += [galton_board(d, float(t)) for d, t in zip(range(1, 9), rng.uniform(0, math.pi / 2, 8))]
    specs += [single_coupler(float(t)) for t in np.linspace(0, math.pi / 2, 5)]
    return specs
