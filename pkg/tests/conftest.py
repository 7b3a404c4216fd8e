import json

import pytest

from hsilayout.synth import SynthOptions, generate_scene, write_fixture


@pytest.fixture(scope="session")
def fixture_factory(tmp_path_factory):
    """Write (and memoise) synthetic fixtures; returns the path of a run config."""
    root = tmp_path_factory.mktemp("fixtures")
    made = {}

    def make(seed, resolution=64, stages=None, **opts):
        key = (seed, resolution, json.dumps(stages, sort_keys=True), tuple(sorted(opts.items())))
        if key not in made:
            name = f"s{seed}_{len(made)}"
            o = SynthOptions(**opts)
            write_fixture(generate_scene(seed, o), root / name, o)
            cfg = {"manifest": "manifest.json", "gt": "gt.json", "output_dir": "out", "seed": seed,
                   "sdf": {"resolution": resolution}}
            if stages is not None:
                cfg["stages"] = stages
            path = root / name / "config.json"
            path.write_text(json.dumps(cfg))
            made[key] = path
        return made[key]

    return make


def quick_stages(n=5):
    return [{"stage": s, "iterations": n} for s in ("scene-init", "cam-ground", "full-hsi")]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
