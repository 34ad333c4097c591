"""FastAPI service wrapping the computation core.

Every computation the artifact exposes is a POST endpoint with a pydantic
request/response pair; the CLI is a thin client of this layer (in-process by
default, HTTP with --server).  Heavy state (eigenvalue tables, cutoff splines,
class groups) persists across requests in module caches, which is the point
of running this as a service.
"""

from __future__ import annotations

import datetime
import math
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .arith import factorize, kronecker, moebius
from .errors import RsmomError
from .hecke import (
    EigenSystem,
    TensorCoefficients,
    builtin_eigensystem,
    load_eigensystem,
    elliptic_eigensystem,
)
from .lseries import RankinSetup, central_value, generic_parity, root_number
from .moments import (
    average_both_routes,
    average_route_A,
    average_route_B,
    main_term,
    main_term_inputs,
)
from .params import TOLERANCES
from .quadorders import QuadOrder, build_class_group, dedekind_class_number
from .shifted import WINDOWS, ShiftedSumSpec, exponent_fit, shifted_sum
from .special import WhittakerParams, normalized_whittaker, whittaker_eval

app = FastAPI(title="rsmom", version=__version__)


def _provenance(config: dict) -> dict:
    return {
        "version": __version__,
        "config": config,
        "tolerances": dict(TOLERANCES),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def resolve_tensor(forms: list[str], p_max: int) -> TensorCoefficients:
    systems: list[EigenSystem] = []
    for spec in forms:
        if spec.startswith("file:"):
            systems.append(load_eigensystem(spec[5:]))
        elif spec.startswith("curve:"):
            coeffs = tuple(int(v) for v in spec[6:].split(","))
            if len(coeffs) not in (2, 5):
                raise RsmomError("curve spec needs 2 or 5 coefficients")
            systems.append(
                elliptic_eigensystem(coeffs, p_max=min(p_max, 100_000))
            )
        else:
            systems.append(builtin_eigensystem(spec, p_max))
    return TensorCoefficients(systems)


# ---------------------------------------------------------------------------
# request / response models
# ---------------------------------------------------------------------------


class ClassGroupRequest(BaseModel):
    discriminant: int = Field(description="fundamental discriminant D_K < 0")
    conductor: int = 1


class CharacterInfo(BaseModel):
    index: int
    conductor: int
    order: int
    exponents: list[int]


class ClassGroupResponse(BaseModel):
    discriminant: int
    conductor: int
    order_discriminant: int
    class_number: int
    dedekind_class_number: int
    forms: list[tuple[int, int, int]]
    structure: list[int]
    characters: list[CharacterInfo]
    provenance: dict


class CentralRequest(BaseModel):
    forms: list[str] = ["delta"]
    discriminant: int
    conductor: int = 1
    character_index: int | None = None
    k: int | None = None
    damping: float = 0.25
    p_max: int = 10_000
    basechange_conductor: float | None = None


class CentralResponse(BaseModel):
    value: float
    k: int
    Y: float
    root_number: int
    terms_used: int
    tail_estimate: float
    forced_parity: bool
    character_conductor: int | None
    provenance: dict


class AverageRequest(BaseModel):
    forms: list[str] = ["delta"]
    discriminant: int
    conductor: int = 1
    route: Literal["a", "b", "both"] = "both"
    k: int | None = None
    damping: float = 0.25
    p_max: int = 10_000
    threads: int = 1
    with_main_term: bool = True


class AverageResponse(BaseModel):
    report: dict
    provenance: dict


class ShiftedRequest(BaseModel):
    forms: list[str] = ["delta"]
    q_list: list[int] = [1, 2, 4, 8]
    y_list: list[float] = [1e3, 1e4, 1e5, 1e6]
    window: Literal["compact", "gauss_log"] = "compact"
    p_max: int = 1_000_000
    fit: bool = True


class ShiftedResponse(BaseModel):
    grid: list[dict]
    fit: dict | None
    provenance: dict


class WhittakerRequest(BaseModel):
    p: float = 0.0
    nu_real: float = 0.0
    nu_imag: float = 0.0
    normalized: bool = False
    weight_q: int | None = None
    y_values: list[float]


class WhittakerResponse(BaseModel):
    rows: list[tuple[float, float]]
    provenance: dict


class SelftestResponse(BaseModel):
    passed: bool
    checks: list[dict]
    provenance: dict


# ---------------------------------------------------------------------------
# endpoints
# ---------------------------------------------------------------------------


def _wrap_errors(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except RsmomError as exc:
        raise HTTPException(
            status_code=422,
            detail={"error": type(exc).__name__, "message": str(exc),
                    "exit_code": exc.exit_code},
        ) from exc


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/classgroup", response_model=ClassGroupResponse)
def classgroup(req: ClassGroupRequest) -> ClassGroupResponse:
    def run():
        g = build_class_group(req.discriminant, req.conductor)
        chars = g.characters()
        return ClassGroupResponse(
            discriminant=req.discriminant,
            conductor=req.conductor,
            order_discriminant=g.disc,
            class_number=g.h,
            dedekind_class_number=dedekind_class_number(
                req.discriminant, req.conductor
            ),
            forms=[(f.a, f.b, f.c) for f in g.forms],
            structure=g.structure,
            characters=[
                CharacterInfo(
                    index=i,
                    conductor=ch.conductor,
                    order=_char_order(ch),
                    exponents=list(ch.exponents),
                )
                for i, ch in enumerate(chars)
            ],
            provenance=_provenance(req.model_dump()),
        )

    return _wrap_errors(run)


def _char_order(ch) -> int:
    out = 1
    for e, n in zip(ch.exponents, ch.group.cyclic_orders):
        if e:
            out = math.lcm(out, n // math.gcd(e, n))
    return out


@app.post("/central", response_model=CentralResponse)
def central(req: CentralRequest) -> CentralResponse:
    def run():
        tensor = resolve_tensor(req.forms, req.p_max)
        order = QuadOrder(req.discriminant, req.conductor)
        character = None
        if req.character_index is not None:
            g = build_class_group(req.discriminant, req.conductor)
            character = g.characters()[req.character_index]
        setup = RankinSetup(
            tensor, order, character,
            basechange_conductor=req.basechange_conductor,
        )
        r = central_value(setup, k=req.k, a=req.damping)
        return CentralResponse(
            value=r.value,
            k=r.k,
            Y=r.Y,
            root_number=r.root_number,
            terms_used=r.terms_used,
            tail_estimate=r.tail_estimate,
            forced_parity=r.forced_parity,
            character_conductor=r.character_conductor,
            provenance=_provenance(req.model_dump()),
        )

    return _wrap_errors(run)


@app.post("/average", response_model=AverageResponse)
def average(req: AverageRequest) -> AverageResponse:
    def run():
        tensor = resolve_tensor(req.forms, req.p_max)
        if req.route == "a":
            rep = average_route_A(
                tensor, req.discriminant, req.conductor,
                k=req.k, a=req.damping, threads=req.threads,
            )
        elif req.route == "b":
            rep = average_route_B(
                tensor, req.discriminant, req.conductor, k=req.k, a=req.damping
            )
        else:
            rep = average_both_routes(
                tensor, req.discriminant, req.conductor,
                k=req.k, a=req.damping, threads=req.threads,
                with_main_term=req.with_main_term,
            )
        return AverageResponse(
            report=rep.to_dict(), provenance=_provenance(req.model_dump())
        )

    return _wrap_errors(run)


@app.post("/shifted", response_model=ShiftedResponse)
def shifted(req: ShiftedRequest) -> ShiftedResponse:
    def run():
        tensor = resolve_tensor(req.forms, req.p_max)
        if req.fit:
            fit = exponent_fit(tensor, req.q_list, req.y_list, req.window)
            return ShiftedResponse(
                grid=fit.grid,
                fit=fit.to_dict(),
                provenance=_provenance(req.model_dump()),
            )
        window = WINDOWS[req.window]()
        rows = []
        for q in req.q_list:
            for Y in req.y_list:
                s, sn = shifted_sum(ShiftedSumSpec(tensor, q, Y, window))
                rows.append({"q": q, "Y": Y, "S": s, "S_normalized": sn})
        return ShiftedResponse(
            grid=rows, fit=None, provenance=_provenance(req.model_dump())
        )

    return _wrap_errors(run)


@app.post("/whittaker", response_model=WhittakerResponse)
def whittaker(req: WhittakerRequest) -> WhittakerResponse:
    def run():
        nu = complex(req.nu_real, req.nu_imag)
        rows = []
        if req.normalized:
            q = req.weight_q if req.weight_q is not None else int(2 * req.p)
            for y in req.y_values:
                rows.append(
                    (y, complex(normalized_whittaker(q, nu, y)).real)
                )
        else:
            params = WhittakerParams(p=req.p, nu=nu)
            for y in req.y_values:
                rows.append((y, whittaker_eval(params, y)))
        return WhittakerResponse(
            rows=rows, provenance=_provenance(req.model_dump())
        )

    return _wrap_errors(run)


@app.post("/selftest", response_model=SelftestResponse)
def selftest() -> SelftestResponse:
    checks = run_selftest()
    return SelftestResponse(
        passed=all(c["passed"] for c in checks),
        checks=checks,
        provenance=_provenance({}),
    )


def run_selftest() -> list[dict]:
    """Fast invariant sweep (seconds, not the full acceptance suite)."""
    checks = []

    def check(name, fn):
        try:
            detail = fn()
            checks.append({"name": name, "passed": True, "detail": detail})
        except Exception as exc:  # noqa: BLE001 - report, don't crash
            checks.append({"name": name, "passed": False, "detail": str(exc)})

    def kron_mult():
        for d in (-4, -23, 5):
            for m in range(1, 60):
                for n in range(1, 60):
                    assert kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)
        return "multiplicative on three discriminants"

    def dedekind():
        for d, c in ((-4, 5), (-3, 2), (-23, 3), (-7, 6)):
            g = build_class_group(d, c)
            assert g.h == dedekind_class_number(d, c)
        return "formula matches enumeration"

    def orthogonality():
        g = build_class_group(-23, 1)
        for ch in g.characters():
            s = sum(ch.value(i) for i in range(g.h))
            target = g.h if ch.is_trivial else 0.0
            assert abs(s - target) < 1e-12
        return "character sums exact"

    def hecke_recursion():
        from .hecke import delta_eigensystem

        es = delta_eigensystem(1000)
        for p in (2, 3, 5, 7):
            l1 = es.lam_p(p)
            for j in (2, 3, 4):
                lhs = l1 * es.lam_prime_power(p, j)
                rhs = es.lam_prime_power(p, j + 1) + es.lam_prime_power(p, j - 1)
                assert abs(lhs - rhs) < 1e-12
        return "recursion to 1e-12"

    def cutoff_residue():
        from .special import cutoff_function, holomorphic_pair_arch

        v = cutoff_function(0, holomorphic_pair_arch(12), a=0.25)
        assert abs(float(v(1e-6)) - 1.0) < 1e-4
        return "V1(0+) -> 1"

    check("kronecker_multiplicative", kron_mult)
    check("dedekind_vs_enumeration", dedekind)
    check("character_orthogonality", orthogonality)
    check("hecke_recursion", hecke_recursion)
    check("cutoff_residue", cutoff_residue)
    return checks
