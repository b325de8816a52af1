"""Scaled Polarity MCP Server.

Exposes the exact radial pipeline, the scalar analysis of the J-ratio and the
verification suites as MCP tools. Every tool returns a JSON-ready dict with
"success" and either results or error/message/suggestions.
"""

import logging
from collections.abc import AsyncIterator
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Annotated, Any

from mcp.server.fastmcp import Context, FastMCP
from mcp.server.session import ServerSession

from . import analysis
from .bodies import SUPPORTED_SHAPES, get_body, mahler_volume
from .config import ExperimentConfig
from .covering import covering_volume_bounds
from .errors import ConfigError, ScaledPolarityError
from .profiles import SUPPORTED_TRANSFORMS, Profile
from .profiles import transform_profile as _transform_profile
from .radial import RadialFunction, integral_exp, mahler_product_A, transform_radial
from .radial import santalo_ratio as _santalo_ratio
from .suites import SUPPORTED_SUITES, ExperimentSession

logger = logging.getLogger(__name__)

PROFILE_HINT = 'Profile as {"breakpoints": [...], "values": [...], "tail": {"slope": s} | {"bounded": true}}'
BODY_HINT = f'Body as {{"type": ..., ...}}; supported types: {SUPPORTED_SHAPES}'


@dataclass
class AppContext:
    """Application context with the experiment session."""
    session: ExperimentSession


@asynccontextmanager
async def app_lifespan(server: FastMCP) -> AsyncIterator[AppContext]:
    """
    Manage application lifecycle.

    On startup: build the session config from CDL_* variables, falling back to defaults.
    """
    try:
        config = ExperimentConfig.from_env()
    except ConfigError as e:
        logger.warning("Ignoring CDL_* environment: %s", e)
        config = ExperimentConfig()
    yield AppContext(session=ExperimentSession(config))


mcp = FastMCP(
    "Scaled Polarity MCP",
    lifespan=app_lifespan,
    json_response=True
)


def _failure(e: Exception, message: str, suggestions: list[str]) -> dict:
    return {
        "success": False,
        "error": f"{type(e).__name__}: {e}",
        "message": message,
        "suggestions": suggestions,
    }


def _radial(body: dict[str, Any], profile: dict[str, Any] | None) -> RadialFunction:
    data = {"body": body}
    if profile is not None:
        data["profile"] = profile
    return RadialFunction.from_dict(data)


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def describe_body(
    body: Annotated[dict, BODY_HINT],
) -> dict:
    """
    Describe a convex body: volume, centroid, polar body and Mahler volume.
    """
    try:
        k = get_body(body)
        polar = k.polar()
        return {
            "success": True,
            "shape": k.shape,
            "dim": k.dim,
            "volume": k.volume(),
            "centroid": k.centroid().tolist(),
            "symmetric": k.is_symmetric(),
            "polar": polar.to_dict(),
            "polar_volume": polar.volume(),
            "mahler_volume": mahler_volume(k),
        }
    except ScaledPolarityError as e:
        return _failure(e, "Could not build the body", [BODY_HINT, "The origin must lie in the interior"])


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def transform_profile(
    profile: Annotated[dict, PROFILE_HINT],
    kind: Annotated[str, f"One of {SUPPORTED_TRANSFORMS}"],
    alpha: Annotated[float, "Scaling parameter alpha > 0"] = 1.0,
) -> dict:
    """
    Apply an exact transform to a piecewise-linear geometric convex profile.
    """
    try:
        out = _transform_profile(Profile.from_dict(profile), kind, alpha)
        return {"success": True, "kind": kind, "alpha": alpha, "profile": out.to_dict()}
    except ScaledPolarityError as e:
        return _failure(e, "Transform failed", [PROFILE_HINT, f"Supported transforms: {SUPPORTED_TRANSFORMS}"])


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def santalo_ratio(
    body: Annotated[dict, BODY_HINT],
    alpha: Annotated[float, "Scaling parameter alpha > 0"],
    profile: Annotated[dict | None, f"{PROFILE_HINT}; the norm when omitted"] = None,
    side: Annotated[str, "'left' (alpha J) or 'right' (x -> alpha J(x/alpha))"] = "left",
) -> dict:
    """
    Ratio int e^{-J phi} / int e^{-phi} for phi(x) = u(||x||_K).
    """
    try:
        phi = _radial(body, profile)
        return {"success": True, "alpha": alpha, "side": side, "ratio": _santalo_ratio(phi, alpha, side)}
    except ScaledPolarityError as e:
        return _failure(e, "Ratio could not be computed", ["The function must be integrable", BODY_HINT])


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def mahler_product(
    body: Annotated[dict, BODY_HINT],
    alpha: Annotated[float, "Scaling parameter alpha > 0"],
    profile: Annotated[dict | None, f"{PROFILE_HINT}; the norm when omitted"] = None,
) -> dict:
    """
    Mahler product int e^{-phi} int e^{-A_alpha phi} of a radial function.
    """
    try:
        phi = _radial(body, profile)
        dual = transform_radial(phi, "polarity", alpha)
        return {
            "success": True,
            "alpha": alpha,
            "integral": integral_exp(phi),
            "dual_integral": integral_exp(dual),
            "product": mahler_product_A(phi, alpha),
            "dual": dual.to_dict(),
        }
    except ScaledPolarityError as e:
        return _failure(e, "Mahler product could not be computed", ["Both functions must be integrable", BODY_HINT])


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def compute_rho(
    n: Annotated[int, "Dimension n >= 1"],
) -> dict:
    """
    rho_n and the regime threshold rho_n (n+2)^2.
    """
    try:
        rho = analysis.compute_rho(n)
        return {"success": True, "n": n, "rho": rho, "threshold": analysis.threshold(n)}
    except ScaledPolarityError as e:
        return _failure(e, "rho_n bisection failed", ["n must be a positive integer"])


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def regime_report(
    n: Annotated[int, "Dimension n >= 1"],
    alpha: Annotated[float, "Scaling parameter alpha > 0"],
) -> dict:
    """
    lambda_n(alpha), its maximizer and gamma = lambda alpha^n / n!, with regime verdicts.
    """
    try:
        return {"success": True, **analysis.regime_report(n, alpha).to_dict()}
    except ScaledPolarityError as e:
        best = getattr(e, "best", None)
        result = _failure(e, "Regime analysis failed", ["Try a slightly different alpha"])
        if best is not None:
            result["best"] = list(best)
        return result


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def classify_sign_pattern(
    n: Annotated[int, "Dimension n >= 1"],
    alpha: Annotated[float, "Scaling parameter alpha > 0"],
    lam: Annotated[float, "Level lambda > 0"],
) -> dict:
    """
    Sign pattern of h_alpha - lambda: one crossing or three roots.
    """
    try:
        pattern = analysis.classify_sign_pattern(n, alpha, lam)
        return {"success": True, "kind": pattern.kind, "roots": list(pattern.roots)}
    except ScaledPolarityError as e:
        return _failure(e, "Classification failed", ["lambda must be positive"])


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def covering_bounds(
    phi_body: Annotated[dict, BODY_HINT],
    psi_body: Annotated[dict, BODY_HINT],
    phi_profile: Annotated[dict | None, PROFILE_HINT] = None,
    psi_profile: Annotated[dict | None, PROFILE_HINT] = None,
) -> dict:
    """
    Volume-ratio bounds for the covering number N(e^{-phi}, e^{-psi}).
    """
    try:
        est = covering_volume_bounds(_radial(phi_body, phi_profile), _radial(psi_body, psi_profile))
        value, source = est.estimate()
        lower, upper = est.bounds()
        return {
            "success": True, **est.to_dict(), "estimate": value, "source": source,
            "bounds": [lower, upper],
        }
    except ScaledPolarityError as e:
        return _failure(e, "Covering bounds could not be computed", [
            "Pairs on different bodies need n <= 3",
            "All integrals must be finite",
        ])


@mcp.tool(annotations={
    "readOnlyHint": False,
    "idempotentHint": False
})
def run_suite(
    ctx: Context[ServerSession, AppContext],
    suite: Annotated[str, f"One of {SUPPORTED_SUITES}"],
    n: Annotated[list[int] | None, "Dimensions"] = None,
    alpha: Annotated[list[float] | None, "Alphas; 'auto' multiples of the threshold when omitted"] = None,
    samples: Annotated[int | None, "Random functions per (n, alpha)"] = None,
    out: Annotated[str | None, "Output directory"] = None,
) -> dict:
    """
    Run a verification suite and write its CSV and JSON reports.
    """
    session = ctx.request_context.lifespan_context.session
    try:
        outcome = session.run(suite=suite, n=n, alpha=alpha or "auto", samples=samples, out=out)
    except ConfigError as e:
        return _failure(e, "Invalid suite configuration", [f"Supported suites: {SUPPORTED_SUITES}"])
    return {"success": outcome.passed, **outcome.to_dict()}


@mcp.tool(annotations={
    "readOnlyHint": True,
    "idempotentHint": True
})
def get_session_status(
    ctx: Context[ServerSession, AppContext],
) -> dict:
    """
    Current configuration and the outcome of the last suite run.
    """
    session = ctx.request_context.lifespan_context.session
    return {"success": True, **session.status()}


def main():
    """Entry point for the MCP server."""
    mcp.run(transport="stdio")


if __name__ == "__main__":
    main()
