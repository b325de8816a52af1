import math
from types import SimpleNamespace

import pytest

from scaled_polarity import server
from scaled_polarity.config import ExperimentConfig
from scaled_polarity.suites import ExperimentSession

CUBE = {"type": "box", "half_widths": [1.0, 1.0]}
INTERVAL = {"type": "box", "half_widths": [1.0]}
IDENTITY = {"breakpoints": [0.0], "values": [0.0], "tail": {"slope": 1.0}}


@pytest.fixture
def ctx(tmp_path):
    session = ExperimentSession(ExperimentConfig(out=str(tmp_path)))
    app = server.AppContext(session=session)
    return SimpleNamespace(request_context=SimpleNamespace(lifespan_context=app))


async def test_tools_are_registered():
    names = {tool.name for tool in await server.mcp.list_tools()}
    assert names == {
        "describe_body",
        "transform_profile",
        "santalo_ratio",
        "mahler_product",
        "compute_rho",
        "regime_report",
        "classify_sign_pattern",
        "covering_bounds",
        "run_suite",
        "get_session_status",
    }


async def test_lifespan_yields_a_session(monkeypatch):
    monkeypatch.setenv("CDL_SEED", "not-a-number")
    async with server.app_lifespan(server.mcp) as app:
        assert isinstance(app.session, ExperimentSession)
        assert app.session.config.seed == 0


def test_describe_body():
    result = server.describe_body(CUBE)
    assert result["success"] is True
    assert result["volume"] == pytest.approx(4.0)
    assert result["polar_volume"] == pytest.approx(2.0)
    assert result["mahler_volume"] == pytest.approx(8.0)
    assert result["symmetric"] is True


def test_describe_body_reports_errors():
    result = server.describe_body({"type": "torus"})
    assert result["success"] is False
    assert "InvalidBodyError" in result["error"]
    assert result["suggestions"]


def test_transform_profile():
    result = server.transform_profile(IDENTITY, "legendre")
    assert result["success"] is True
    assert result["profile"]["tail"] == {"bounded": True}
    assert server.transform_profile(IDENTITY, "fourier")["success"] is False


def test_santalo_ratio_of_norm():
    result = server.santalo_ratio(CUBE, 2.0)
    assert result["ratio"] == pytest.approx(0.5)
    assert server.santalo_ratio(CUBE, 2.0, side="right")["ratio"] == pytest.approx(2.0)


def test_mahler_product():
    result = server.mahler_product({"type": "ball", "dim": 2}, 3.0, {"breakpoints": [0.0, 1.0], "values": [0.0, 0.0]})
    assert result["product"] == pytest.approx(math.pi**2)
    assert result["dual"]["body"]["type"] == "ball"


def test_compute_rho_and_sign_pattern():
    rho = server.compute_rho(1)
    assert rho["rho"] == pytest.approx(0.1718, abs=2e-3)
    assert server.compute_rho(0)["success"] is False
    pattern = server.classify_sign_pattern(1, 2.0, 1.0)
    assert pattern["kind"] == "one_crossing"
    assert len(server.classify_sign_pattern(1, 1.0, 1.0)["roots"]) == 3


def test_regime_report():
    result = server.regime_report(2, 20.0)
    assert result["success"] is True
    assert result["regime"] == "exact"


def test_covering_bounds():
    result = server.covering_bounds(INTERVAL, INTERVAL)
    assert result["lower_bound"] == pytest.approx(1.0)
    assert result["upper_ginf"] == pytest.approx(8.0)
    assert result["source"] == "volume"
    assert result["bounds"] == pytest.approx([1.0, 2.0])
    bad = server.covering_bounds(INTERVAL, INTERVAL, phi_profile={"breakpoints": [0.0], "values": [0.0], "tail": {"slope": 0.0}})
    assert bad["success"] is False


def test_run_suite_and_status(ctx):
    result = server.run_suite(ctx, "rho-table", n=[1, 2])
    assert result["success"] is True
    assert len(result["files"]) == 2
    status = server.get_session_status(ctx)
    assert status["runs"] == 1
    assert status["config"]["n"] == [1, 2]


def test_run_suite_rejects_unknown_suite(ctx):
    result = server.run_suite(ctx, "everything")
    assert result["success"] is False
    assert "Supported suites" in result["suggestions"][0]
