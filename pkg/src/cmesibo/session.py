"""Versioned JSON persistence for ask/tell optimizer sessions.

A session file captures everything needed to continue a loop in a new
process: configuration, observed data, pending queries, fitted kernel
parameters, the generator state, and the trace so far.  Serialization is
canonical (sorted keys, full-precision floats), so an unchanged session
round-trips byte-exactly.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .domain import Box
from .gp import KernelSpec
from .loop import BoConfig, Optimizer, ProblemDescriptor, TraceRecord
from .maxvalue import SolverConfig
from .problems import BENCHMARKS, get_problem

SESSION_VERSION = 1


class SessionError(RuntimeError):
    """Malformed or incompatible session file."""


def problem_ref(problem) -> dict:
    """A serializable handle: by name for built-ins, by geometry otherwise."""
    if problem.name in BENCHMARKS or problem.name.startswith("gp-synthetic-"):
        return {"name": problem.name, "custom": False}
    return {
        "name": problem.name,
        "custom": True,
        "lower": [float(v) for v in problem.domain.lower],
        "upper": [float(v) for v in problem.domain.upper],
        "thresholds": [float(z) for z in problem.thresholds],
    }


def resolve_problem(ref: dict):
    if not ref.get("custom", False):
        return get_problem(ref["name"])
    return ProblemDescriptor(
        ref["name"],
        Box(np.array(ref["lower"]), np.array(ref["upper"])),
        list(ref["thresholds"]),
    )


def _kernel_to_dict(spec: KernelSpec) -> dict:
    return {
        "sigma2_lin": float(spec.sigma2_lin),
        "sigma2_rbf": float(spec.sigma2_rbf),
        "lengthscales": [float(v) for v in spec.lengthscales],
    }


def _kernel_from_dict(d: dict) -> KernelSpec:
    return KernelSpec(d["sigma2_lin"], d["sigma2_rbf"], np.array(d["lengthscales"]))


def _record_to_dict(r: TraceRecord) -> dict:
    return {
        "iteration": r.iteration,
        "q": r.q,
        "query": [float(v) for v in r.query],
        "recommendation": [float(v) for v in r.recommendation],
        "utility_gap": float(r.utility_gap),
        "best_observed_gap": float(r.best_observed_gap),
        "feasible_by_rule": bool(r.feasible_by_rule),
    }


def _record_from_dict(d: dict) -> TraceRecord:
    return TraceRecord(
        d["iteration"],
        d["q"],
        np.array(d["query"]),
        np.array(d["recommendation"]),
        d["utility_gap"],
        d["best_observed_gap"],
        d["feasible_by_rule"],
    )


def session_state(opt: Optimizer, ref: dict) -> dict:
    cfg = dataclasses.asdict(opt.cfg)
    return {
        "version": SESSION_VERSION,
        "problem": ref,
        "config": cfg,
        "iteration": opt.iteration,
        "initialized": opt.initialized,
        "X": opt.X.tolist(),
        "Y": opt.Y.tolist(),
        "pending": None if opt.pending is None else opt.pending.tolist(),
        "kernels": [_kernel_to_dict(k) for k in opt.kernels],
        "rng_state": opt.rng.bit_generator.state,
        "trace": [_record_to_dict(r) for r in opt.trace.records],
    }


def save_session(opt: Optimizer, ref: dict, path) -> None:
    doc = session_state(opt, ref)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_session(path):
    """Rebuild (Optimizer, problem_ref) from a session file."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != SESSION_VERSION:
        raise SessionError(
            f"unsupported session version {doc.get('version')!r}; "
            f"expected {SESSION_VERSION}"
        )
    ref = doc["problem"]
    problem = resolve_problem(ref)
    cfg_d = dict(doc["config"])
    cfg_d["solver"] = SolverConfig(**cfg_d["solver"])
    cfg = BoConfig(**cfg_d)
    opt = Optimizer(problem, cfg)
    d = problem.domain.dim
    C = len(problem.thresholds)
    opt.X = np.array(doc["X"], dtype=float).reshape(-1, d)
    opt.Y = np.array(doc["Y"], dtype=float).reshape(-1, C + 1)
    opt.pending = (
        None
        if doc["pending"] is None
        else np.array(doc["pending"], dtype=float).reshape(-1, d)
    )
    opt.iteration = doc["iteration"]
    opt.initialized = doc["initialized"]
    opt.kernels = [_kernel_from_dict(k) for k in doc["kernels"]]
    opt.rng.bit_generator.state = doc["rng_state"]
    opt.trace.records = [_record_from_dict(r) for r in doc["trace"]]
    return opt, ref
