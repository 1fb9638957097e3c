"""Batch front-end: scenario runs, map checks, and group self-test suites.

Scenarios come from a flat "key = value" config file ('#' starts a comment,
unknown and duplicate keys are rejected).  Two modes:

* mode = flow: integrate a builtin system, export the trajectory CSV,
  certify the variational Jacobians and the trajectory-built shift
  transform, and write the invariance and ledger reports;
* mode = map: certify one of the builtin catalog maps at random probes.

--selftest runs the group-law suites with a fixed seed and writes a JSON
summary.  Exit codes: 0 all checks pass, 1 a verification failed (reports
are still written), 2 bad configuration or usage.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .forms import MapHandle, PhasePoint, as_dimension, block_to_interleaved
from .groups import (
    FactorError,
    HeisenbergElement,
    JacobiElement,
    IglElement,
    PatternViolation,
    VfrView,
    conjugate_by_sp,
    euclidean_element,
    heisenberg_generators,
    igl_factor,
    jacobi_factor,
    random_jacobi,
    vfr_convert,
)
from .systems import BUILTIN_SYSTEMS, builtin_system
from .dynamics import integrate_flow, make_rho, write_csv
from .verify import (
    box_probes,
    check_flow_jacobians,
    check_invariance,
    energy_ledger,
    hamilton_residual,
    noncommutativity_check,
    trajectory_probes,
)


class ConfigError(ValueError):
    pass


_INT_KEYS = {"n", "probes", "seed"}
_FLOAT_KEYS = {
    "t_end", "dt",
    "mass", "frequency", "amplitude", "drive_frequency", "g",
    "tol_omega", "tol_lambda", "tol_hamilton", "tol_ledger",
}
_STR_KEYS = {"mode", "system", "method", "map"}
_PARAM_KEYS = ("mass", "frequency", "amplitude", "drive_frequency", "g")
_MAP_NAMES = ("identity", "t_doubling", "rotation", "shear", "scaling")

_DEFAULTS = {
    "mode": "flow",
    "system": "harmonic_oscillator",
    "n": 1,
    "z0": None,  # block order: q1..qn p1..pn eps t
    "t_end": 5.0,
    "dt": 1e-3,
    "method": "rk4",
    "probes": 20,
    "seed": 0,
    "tol_omega": 1e-5,
    "tol_lambda": 1e-8,
    "tol_hamilton": 1e-5,
    "tol_ledger": 1e-5,
    "map": "identity",
    "mass": None,
    "frequency": None,
    "amplitude": None,
    "drive_frequency": None,
    "g": None,
}


def _parse_value(key, val, lineno):
    try:
        if key in _INT_KEYS:
            return int(val)
        if key in _FLOAT_KEYS:
            return float(val)
        if key == "z0":
            return [float(x) for x in val.split()]
        return val
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {val!r}") from None


def parse_config(path):
    """Read a config file; returns (cfg dict, set of keys present in the file)."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    cfg = dict(_DEFAULTS)
    present = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in present:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not val:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        present.add(key)
        cfg[key] = _parse_value(key, val, lineno)
    return cfg, present


def validate_config(cfg, present):
    if cfg["mode"] not in ("flow", "map"):
        raise ConfigError(f"mode must be 'flow' or 'map', got {cfg['mode']!r}")
    if cfg["method"] not in ("rk4", "leapfrog"):
        raise ConfigError(f"method must be 'rk4' or 'leapfrog', got {cfg['method']!r}")
    if cfg["n"] < 1:
        raise ConfigError(f"n must be >= 1, got {cfg['n']}")
    if not cfg["dt"] > 0:
        raise ConfigError(f"dt must be positive, got {cfg['dt']}")
    if cfg["probes"] < 1:
        raise ConfigError(f"probes must be >= 1, got {cfg['probes']}")
    if cfg["seed"] < 0:
        raise ConfigError(f"seed must be >= 0, got {cfg['seed']}")
    for key in ("tol_omega", "tol_lambda", "tol_hamilton", "tol_ledger"):
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]}")
    if cfg["map"] not in _MAP_NAMES:
        raise ConfigError(f"map must be one of {_MAP_NAMES}, got {cfg['map']!r}")
    if cfg["system"] not in BUILTIN_SYSTEMS:
        raise ConfigError(
            f"system must be one of {sorted(BUILTIN_SYSTEMS)}, got {cfg['system']!r}"
        )
    d = 2 * cfg["n"] + 2
    if cfg["z0"] is None:
        cfg["z0"] = [1.0] * cfg["n"] + [0.0] * cfg["n"] + [0.0, 0.0]
    elif len(cfg["z0"]) != d:
        raise ConfigError(f"z0 must have {d} entries (q1..qn p1..pn eps t), got {len(cfg['z0'])}")
    if cfg["mode"] == "flow" and not cfg["t_end"] > cfg["z0"][-1]:
        raise ConfigError(f"t_end ({cfg['t_end']}) must exceed the initial time ({cfg['z0'][-1]})")
    return cfg


def _resolved(cfg, params):
    out = {
        k: cfg[k]
        for k in (
            "mode", "system", "n", "t_end", "dt", "method", "probes", "seed",
            "tol_omega", "tol_lambda", "tol_hamilton", "tol_ledger", "map",
        )
    }
    out["z0"] = [float(x) for x in cfg["z0"]]
    out["params"] = dict(params)
    return out


def _write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _map_catalog(n):
    """Hand-built check maps; all but t_doubling are lifted canonical maps."""
    nd = as_dimension(n)
    d = nd.extended
    k = nd.reduced

    def linear(M, name):
        return MapHandle(func=lambda z, M=M: M @ np.asarray(z, dtype=float), n=nd, name=name)

    T = np.eye(d)
    T[-1, -1] = 2.0
    c, s = np.cos(0.7), np.sin(0.7)
    R = np.eye(d)
    S = np.eye(d)
    C = np.eye(d)
    for i in range(nd.n):
        R[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = [[c, -s], [s, c]]
        S[2 * i, 2 * i + 1] = 0.5
        C[2 * i, 2 * i] = 2.0
        C[2 * i + 1, 2 * i + 1] = 0.5
    return {
        "identity": MapHandle(
            func=lambda z: np.asarray(z, dtype=float).copy(), n=nd, name="identity"
        ),
        "t_doubling": linear(T, "t_doubling"),
        "rotation": linear(R, "rotation"),
        "shear": linear(S, "shear"),
        "scaling": linear(C, "scaling"),
    }


def run_flow(cfg, params, out_dir):
    try:
        system = builtin_system(cfg["system"], n=cfg["n"], **params)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    z0 = block_to_interleaved(np.asarray(cfg["z0"], dtype=float))
    try:
        traj = integrate_flow(
            system, z0, cfg["t_end"], cfg["dt"],
            method=cfg["method"], with_variational=True,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    write_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    rng = np.random.default_rng(cfg["seed"])
    rho = make_rho(traj, system)
    margin = min(25, max(1, (traj.n_samples - 3) // 3))
    probes = trajectory_probes(traj, cfg["probes"], rng, margin=margin)
    rho_rep = check_invariance(
        rho.as_map(), probes, tol_omega=cfg["tol_omega"], tol_lambda=cfg["tol_lambda"]
    )
    flow_rep = check_flow_jacobians(
        traj, tol_omega=cfg["tol_omega"], tol_lambda=cfg["tol_lambda"], factor_every=10
    )
    h_res = hamilton_residual(traj, system)
    ledger = energy_ledger(traj, system)

    passed = {
        "flow_jacobians": flow_rep.classification == "Jacobimorphism",
        "rho_transform": rho_rep.classification == "Jacobimorphism",
        "hamilton_residual": h_res <= cfg["tol_hamilton"],
        "energy_ledger": ledger.residual <= cfg["tol_ledger"],
    }
    ok = all(passed.values())
    resolved = _resolved(cfg, params)
    _write_json(
        os.path.join(out_dir, "invariance.json"),
        {
            "version": __version__,
            "config": resolved,
            "dt_actual": traj.dt,
            "flow_jacobians": flow_rep.to_dict(),
            "rho_transform": rho_rep.to_dict(),
            "hamilton_residual": h_res,
            "passed": passed,
            "all_passed": ok,
        },
    )
    _write_json(
        os.path.join(out_dir, "ledger.json"),
        {
            "version": __version__,
            "config": resolved,
            "ledger": ledger.to_dict(),
            "passed": passed["energy_ledger"],
        },
    )
    print(
        f"flow jacobians: {flow_rep.classification}"
        f" (omega {flow_rep.omega_residual_max:.3e}, lambda {flow_rep.lambda_residual_max:.3e})"
    )
    print(
        f"rho transform: {rho_rep.classification}"
        f" (omega {rho_rep.omega_residual_max:.3e}, lambda {rho_rep.lambda_residual_max:.3e})"
    )
    print(f"hamilton residual: {h_res:.3e} (tol {cfg['tol_hamilton']:.1e})")
    print(f"ledger residual: {ledger.residual:.3e} (tol {cfg['tol_ledger']:.1e})")
    print("scenario:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def run_map(cfg, params, out_dir):
    handle = _map_catalog(cfg["n"])[cfg["map"]]
    rng = np.random.default_rng(cfg["seed"])
    probes = box_probes(cfg["n"], cfg["probes"], rng)
    rep = check_invariance(
        handle, probes, tol_omega=cfg["tol_omega"], tol_lambda=cfg["tol_lambda"]
    )
    ok = rep.classification == "Jacobimorphism"
    _write_json(
        os.path.join(out_dir, "invariance.json"),
        {
            "version": __version__,
            "config": _resolved(cfg, params),
            "map": cfg["map"],
            "check": rep.to_dict(),
            "all_passed": ok,
        },
    )
    print(
        f"map {cfg['map']}: {rep.classification}"
        f" (omega {rep.omega_residual_max:.3e}, lambda {rep.lambda_residual_max:.3e})"
    )
    return 0 if ok else 1


def run_scenario(cfg, present, out_dir):
    cfg = validate_config(cfg, present)
    params = {k: cfg[k] for k in _PARAM_KEYS if k in present}
    os.makedirs(out_dir, exist_ok=True)
    if cfg["mode"] == "map":
        return run_map(cfg, params, out_dir)
    return run_flow(cfg, params, out_dir)


# selftest suites


def _check(name, residual, threshold, count):
    return {
        "name": name,
        "passed": bool(residual <= threshold),
        "residual": float(residual),
        "threshold": float(threshold),
        "count": int(count),
    }


def _rand_heis(n, rng):
    return HeisenbergElement(w=rng.uniform(-2.0, 2.0, 2 * n), r=float(rng.uniform(-2.0, 2.0)))


def _elem_dist(a, b):
    return max(
        float(np.max(np.abs(a.sigma.sigma - b.sigma.sigma))),
        float(np.max(np.abs(a.w - b.w))),
        abs(a.r - b.r),
        float(abs(a.tr - b.tr)),
    )


def _heis_dist(a, b):
    return max(float(np.max(np.abs(a.w - b.w))), abs(a.r - b.r))


def _check_heisenberg_axioms(rng, reps=200):
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        e = HeisenbergElement.identity(n)
        for _ in range(reps):
            a, b, c = (_rand_heis(n, rng) for _ in range(3))
            worst = max(worst, _heis_dist((a * b) * c, a * (b * c)))
            worst = max(worst, _heis_dist(a * e, a), _heis_dist(e * a, a))
            worst = max(worst, _heis_dist(a * a.inv(), e), _heis_dist(a.inv() * a, e))
            count += 1
    return _check("heisenberg_axioms", worst, 1e-12, count)


def _check_jacobi_axioms(rng, reps=200):
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        e = JacobiElement.identity(n)
        for _ in range(reps):
            a, b, c = (random_jacobi(n, rng) for _ in range(3))
            worst = max(worst, _elem_dist((a * b) * c, a * (b * c)))
            worst = max(worst, _elem_dist(a * a.inv(), e), _elem_dist(a.inv() * a, e))
            count += 1
    return _check("jacobi_axioms", worst, 1e-10, count)


def _check_matrix_homomorphism(rng, reps=200):
    # the matrix realization multiplies like the group when the left
    # factor keeps time direction
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        for _ in range(reps):
            a = random_jacobi(n, rng, tr=1)
            b = random_jacobi(n, rng)
            worst = max(worst, float(np.max(np.abs((a * b).matrix() - a.matrix() @ b.matrix()))))
            count += 1
    return _check("matrix_homomorphism", worst, 1e-10, count)


def _check_matrix_inverse(rng, reps=200):
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        for _ in range(reps):
            a = random_jacobi(n, rng, tr=1)
            worst = max(
                worst, float(np.max(np.abs(a.inv().matrix() - np.linalg.inv(a.matrix()))))
            )
            count += 1
    return _check("matrix_inverse", worst, 1e-10, count)


def _check_sp_conjugation(rng, reps=100):
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        for _ in range(reps):
            g = random_jacobi(n, rng, tr=1)
            s = JacobiElement(sigma=g.sigma, w=np.zeros(2 * n), r=0.0)
            a = _rand_heis(n, rng)
            lhs = conjugate_by_sp(g.sigma, a).matrix()
            rhs = s.matrix() @ a.matrix() @ s.inv().matrix()
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            count += 1
    return _check("sp_conjugation", worst, 1e-10, count)


def _check_factor_roundtrip(rng, reps=200):
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        for _ in range(reps):
            g = random_jacobi(n, rng)
            worst = max(worst, _elem_dist(jacobi_factor(g.matrix(), tol=1e-9), g))
            count += 1
    return _check("factor_roundtrip", worst, 1e-10, count)


def _check_igl_roundtrip(rng, reps=200):
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        for _ in range(reps):
            m = 2 * n + 1
            omega = rng.uniform(-1.0, 1.0, (m, m)) + 2.0 * np.eye(m)
            el = IglElement(omega=omega, u=rng.uniform(-2.0, 2.0, m), eps=int(rng.choice([-1, 1])))
            back = igl_factor(el.matrix(), tol=1e-9)
            worst = max(
                worst,
                float(np.max(np.abs(back.omega - el.omega))),
                float(np.max(np.abs(back.u - el.u))),
                float(abs(back.eps - el.eps)),
            )
            count += 1
    return _check("igl_roundtrip", worst, 1e-12, count)


def _check_lie_algebra(n_max):
    worst, count = 0, 0
    for n in range(1, n_max + 1):
        gens = heisenberg_generators(n)
        W, R = gens[:-1], gens[-1]
        z0 = np.zeros((2 * n, 2 * n), dtype=np.int64)
        for k in range(n):
            z0[2 * k, 2 * k + 1] = 1
            z0[2 * k + 1, 2 * k] = -1
        for a in range(2 * n):
            for b in range(2 * n):
                comm = W[a] @ W[b] - W[b] @ W[a]
                worst = max(worst, int(np.max(np.abs(comm - z0[a, b] * R))))
                count += 1
            commR = W[a] @ R - R @ W[a]
            worst = max(worst, int(np.max(np.abs(commR))))
            count += 1
    return _check("lie_algebra", worst, 0, count)


def _check_delta_automorphism(rng, reps=100):
    # conjugating a translation by the time-reversal element flips w,
    # keeps r; exact in the parameter composition
    worst, count = 0.0, 0
    for n in (1, 2, 3):
        d = JacobiElement.from_parts(np.eye(2 * n), np.zeros(2 * n), 0.0, tr=-1)
        for _ in range(reps):
            h = _rand_heis(n, rng)
            g = JacobiElement.from_parts(np.eye(2 * n), h.w, h.r)
            conj = d * g * d.inv()
            expect = JacobiElement.from_parts(np.eye(2 * n), -h.w, h.r)
            worst = max(worst, _elem_dist(conj, expect))
            count += 1
    return _check("delta_automorphism", worst, 0, count)


def _check_commutators(rng, reps=100):
    worst, count = 0.0, 0
    for _ in range(reps):
        n = int(rng.integers(1, 4))
        a = VfrView(
            v=rng.integers(-3, 4, n).astype(float),
            f=rng.integers(-3, 4, n).astype(float),
            r_phys=float(rng.integers(-3, 4)),
        )
        b = VfrView(
            v=rng.integers(-3, 4, n).astype(float),
            f=rng.integers(-3, 4, n).astype(float),
            r_phys=float(rng.integers(-3, 4)),
        )
        left, right, comm = noncommutativity_check(a, b)
        expect = 2.0 * (float(a.v @ b.f) - float(a.f @ b.v))
        worst = max(worst, abs(comm - expect))
        inert_a = VfrView(v=a.v, f=np.zeros(n), r_phys=0.0)
        inert_b = VfrView(v=b.v, f=np.zeros(n), r_phys=0.0)
        worst = max(worst, abs(noncommutativity_check(inert_a, inert_b)[2]))
        count += 1
    return _check("commutators", worst, 0, count)


def _random_rotation(m, rng):
    Q, R = np.linalg.qr(rng.normal(size=(m, m)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def _check_euclidean(rng, reps=50):
    worst, count = 0.0, 0
    for n in (2, 3):
        for _ in range(reps):
            a = euclidean_element(_random_rotation(n, rng), rng.uniform(-2.0, 2.0, n))
            b = euclidean_element(_random_rotation(n, rng), rng.uniform(-2.0, 2.0, n))
            ga = jacobi_factor(a.matrix(), tol=1e-9)
            if np.max(np.abs(a.w)) > 0 and not np.max(np.abs(ga.w)) > 0:
                worst = np.inf  # a moving frame must not factor as canonical
            c = a * b
            view = vfr_convert(c.heisenberg_part())
            worst = max(worst, float(np.max(np.abs(view.f))), abs(c.r))
            count += 1
    return _check("euclidean_subgroup", worst, 1e-12, count)


def _check_fuzz(rng, magnitude):
    g = random_jacobi(2, rng, tr=1)
    M = g.matrix()
    M[0, 4] += magnitude  # a structural zero of the normal form
    try:
        jacobi_factor(M, tol=1e-9)
        passed = False
    except PatternViolation:
        passed = True
    except FactorError:
        passed = False
    return {
        "name": "fuzz_pattern_violation",
        "passed": passed,
        "residual": float(magnitude),
        "threshold": 1e-9,
        "count": 1,
    }


def run_selftest(seed, n_max, fuzz, out_dir):
    rng = np.random.default_rng(seed)
    checks = [
        _check_heisenberg_axioms(rng),
        _check_jacobi_axioms(rng),
        _check_matrix_homomorphism(rng),
        _check_matrix_inverse(rng),
        _check_sp_conjugation(rng),
        _check_factor_roundtrip(rng),
        _check_igl_roundtrip(rng),
        _check_lie_algebra(n_max),
        _check_delta_automorphism(rng),
        _check_commutators(rng),
        _check_euclidean(rng),
    ]
    if fuzz is not None:
        checks.append(_check_fuzz(rng, fuzz))
    ok = all(c["passed"] for c in checks)
    os.makedirs(out_dir, exist_ok=True)
    _write_json(
        os.path.join(out_dir, "selftest.json"),
        {
            "version": __version__,
            "config": {"seed": seed, "n_max": n_max, "fuzz": fuzz},
            "checks": checks,
            "all_passed": ok,
        },
    )
    for c in checks:
        print(
            f"{c['name']}: {'PASS' if c['passed'] else 'FAIL'}"
            f" (residual {c['residual']:.3e}, threshold {c['threshold']:.3e},"
            f" {c['count']} cases)"
        )
    print("selftest:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="jacobiflow",
        description="Integrate extended Hamiltonian flows and certify invariance.",
    )
    parser.add_argument("--config", metavar="PATH", help="scenario config file")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--tol-omega", type=float, default=None, dest="tol_omega")
    parser.add_argument("--tol-lambda", type=float, default=None, dest="tol_lambda")
    parser.add_argument("--selftest", action="store_true", help="run the group-law suites")
    parser.add_argument(
        "--fuzz", type=float, default=None, metavar="MAG",
        help="selftest: perturb one matrix entry and require detection",
    )
    parser.add_argument(
        "--n", type=int, default=3, help="selftest: largest n for the algebra suite"
    )
    args = parser.parse_args(argv)

    if args.selftest:
        if args.n < 1:
            print("error: --n must be >= 1", file=sys.stderr)
            return 2
        return run_selftest(
            seed=args.seed if args.seed is not None else 0,
            n_max=args.n,
            fuzz=args.fuzz,
            out_dir=args.out,
        )
    if not args.config:
        print("error: either --config or --selftest is required", file=sys.stderr)
        return 2
    try:
        cfg, present = parse_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.tol_omega is not None:
            cfg["tol_omega"] = args.tol_omega
        if args.tol_lambda is not None:
            cfg["tol_lambda"] = args.tol_lambda
        return run_scenario(cfg, present, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
