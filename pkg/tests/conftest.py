import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shapegrasp.bench.synth import generate, load_suite
from shapegrasp.scene_io import CameraIntrinsics, SceneInput

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("ci")


@lru_cache(maxsize=None)
def suite_by_name():
    return {s.name: s for s in load_suite()}


@lru_cache(maxsize=None)
def fixture_scene(name: str, seed: int = 0):
    return generate(suite_by_name()[name], seed)


def rect_mask(shape, cx, cy, length, width, angle_deg=0.0):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    t = math.radians(angle_deg)
    u = (xx - cx) * math.cos(t) + (yy - cy) * math.sin(t)
    v = -(xx - cx) * math.sin(t) + (yy - cy) * math.cos(t)
    return (np.abs(u) <= length / 2) & (np.abs(v) <= width / 2)


def disk_mask(shape, cx, cy, r):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def flat_scene(mask, depth=0.5, rgb=(255, 0, 0), f=600.0):
    h, w = mask.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[mask] = rgb
    d = np.where(mask, depth, 0.0).astype(np.float32)
    k = CameraIntrinsics(fx=f, fy=f, cx=(w - 1) / 2.0, cy=(h - 1) / 2.0)
    return SceneInput(rgb=img, mask=mask, intrinsics=k, depth=d, confidence=np.ones((h, w), np.float32))


@pytest.fixture(scope="session")
def suite():
    return suite_by_name()


# --------------------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        # a criterion passes only if every test carrying it passed
        if _CRITERIA.get(n) in (None, "PASS") or status == "FAIL":
            _CRITERIA[n] = status


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n:>2}: {_CRITERIA[n]}")
