import copy
import math
import unittest
from pathlib import Path

import pytest
import yaml

import dfsramsey.config as cfg
from dfsramsey.constants import moment_to_si

PARITY = {
    "run": {"mode": "parity-scan", "output_dir": "out", "theta_true": "1.83 ea02"},
    "trap": {
        "calibration_voltage": "500 V",
        "calibration_frequency": "850 kHz",
        "tip_voltages": ["1000 V"],
    },
    "magnetic": {"bias_field": "2.9 G", "axial_gradient": "-0.079 G/m"},
    "plan": {
        "wait_times": {"span": "300 ms", "step": "5 ms", "gap": ["160 ms", "180 ms"]},
        "shots_per_point": 100,
        "seed": 11,
    },
}


def _raw(**sections):
    raw = copy.deepcopy(PARITY)
    for key, value in sections.items():
        raw[key] = value
    return raw


class TestParseConfig(unittest.TestCase):
    def test_parity_scan(self):
        config = cfg.parse_config(_raw())
        self.assertEqual(config.mode, "parity-scan")
        self.assertEqual(config.output_dir, Path("out"))
        self.assertAlmostEqual(config.theta / moment_to_si(1.83), 1.0, places=12)
        self.assertEqual(len(config.traps), 1)
        omega = config.traps[0].omega_z / (2 * math.pi)
        self.assertAlmostEqual(omega / (850e3 * math.sqrt(2)), 1.0, places=12)
        self.assertAlmostEqual(config.magnetic.bias_field, 2.9e-4)
        self.assertEqual([s.name for s in config.states], ["psi1", "psi2"])
        self.assertEqual(len(config.wait_times), 56)
        self.assertEqual(config.plan.seed, 11)

    def test_explicit_states(self):
        states = [{"name": "a", "twice_m": [-5, 3, -1, -1], "phi0": "90 deg", "contrast": 0.8}]
        config = cfg.parse_config(_raw(states=states))
        self.assertEqual(config.states[0].twice_m, (-5, 3, -1, -1))
        self.assertAlmostEqual(config.states[0].phi0, math.pi / 2)
        self.assertEqual(config.states[0].contrast, 0.8)

    def test_gradients_instead_of_voltages(self):
        trap = {"gradients": ["10 V/mm2", "20 V/mm2"], "stray_gradient": "0.01 V/mm2"}
        extract = {"slope": "2.975 Hz*mm2/V"}
        config = cfg.parse_config(_raw(run={"mode": "extract"}, trap=trap, extract=extract))
        self.assertAlmostEqual(config.traps[1].gradient, -20e6, delta=1e-3)
        self.assertAlmostEqual(config.traps[1].stray_gradient, 1e4)

    def test_wait_time_list(self):
        plan = {"wait_times": ["0 ms", "10 ms", "20 ms"]}
        config = cfg.parse_config(_raw(plan=plan))
        self.assertEqual(config.wait_times, pytest.approx((0.0, 0.01, 0.02)))

    def test_defaults(self):
        config = cfg.parse_config({"run": {"mode": "extract"}, "extract": {"slope": "3 Hz*mm2/V"}})
        self.assertEqual(config.output_dir, Path("results/extract"))
        self.assertEqual(config.slope, 3.0)
        self.assertEqual(config.n_jobs, 1)
        self.assertIsNone(config.magnetic)


@pytest.mark.parametrize(
    "section,value",
    [
        ("unknown", {}),
        ("run", {"mode": "parity-scan", "colour": "red"}),
        ("run", {"mode": "sweep"}),
        ("run", {"mode": "parity-scan", "n_jobs": 0}),
        ("magnetic", {"bias_field": 2.9}),
        ("magnetic", {"bias_field": "2.9 Hz"}),
        ("magnetic", {"axial_gradient": "1 G/m"}),
        ("magnetic", {"bias_field": "-1 G"}),
        ("trap", {"tip_voltages": ["1000 V"]}),
        ("trap", {"gradients": ["10 V/mm2"], "tip_voltages": ["1000 V"]}),
        ("trap", {"calibration_voltage": "500 V", "calibration_frequency": "850 kHz"}),
        ("states", []),
        ("states", [{"twice_m": [-5, 3, -1]}]),
        ("states", [{"twice_m": [-5, 3, -1, -1], "contrast": 1.4}]),
        ("plan", {"wait_times": [0.0, 0.01], "seed": 1}),
        ("plan", {"wait_times": {"span": "300 ms", "step": "0 ms"}}),
        ("plan", {"wait_times": ["0 ms"], "seed": -1}),
        ("plan", {"wait_times": ["0 ms"], "shots_per_point": 0}),
        ("fit", {"oversampling": 2}),
        ("noise", {"preparation_contrast": 1.5}),
    ],
)
def test_invalid_configs(section, value):
    with pytest.raises(cfg.ConfigError):
        cfg.parse_config(_raw(**{section: value}))


@pytest.mark.parametrize(
    "raw",
    [
        {"run": {"mode": "parity-scan"}},
        {"run": {"mode": "extract"}},
        {"run": {"mode": "fit-only"}},
        _raw(trap={"gradients": ["10 V/mm2", "20 V/mm2"]}),
        _raw(run={"mode": "gradient-scan"}),
        _raw(run={"mode": "angle-scan"}, geometry={"scan_angles": ["0 deg", "30 deg"]}),
    ],
)
def test_mode_requirements(raw):
    with pytest.raises(cfg.ConfigError):
        cfg.parse_config(raw)


ANGLES = {"beta0": "26.9 deg", "scan_angles": ["-60 deg", "-30 deg", "0 deg", "30 deg", "60 deg"]}


def test_angle_scan_default_states_are_prepared_at_right_angle():
    config = cfg.parse_config(_raw(run={"mode": "angle-scan"}, geometry=ANGLES))
    assert [spec.name for spec in config.states] == ["psi1", "psi2"]
    for spec in config.states:
        assert spec.phi0 == pytest.approx(math.pi / 2)
    parity = cfg.parse_config(_raw())
    assert all(spec.phi0 == 0.0 for spec in parity.states)


@pytest.mark.parametrize("phi0", ["0 deg", "180 deg"])
def test_angle_scan_rejects_sign_blind_states(phi0):
    states = [
        {"name": "psi1", "twice_m": [-5, 3, -1, -1], "phi0": "90 deg"},
        {"name": "psi2", "twice_m": [3, -5, -1, -1], "phi0": phi0},
    ]
    with pytest.raises(cfg.ConfigError, match="psi2"):
        cfg.parse_config(_raw(run={"mode": "angle-scan"}, geometry=ANGLES, states=states))


def test_fit_only_paths_resolve_against_base_dir(tmp_path):
    raw = {
        "run": {"mode": "fit-only"},
        "fit_only": {
            "datasets": [
                {"path": "data/psi1.csv", "state": "psi1", "gradient": "10 V/mm2"},
                {"path": str(tmp_path / "abs.csv"), "state": "psi2", "phi0": "90 deg"},
            ]
        },
    }
    config = cfg.parse_config(raw, base_dir=tmp_path)
    assert config.datasets[0].path == tmp_path / "data" / "psi1.csv"
    assert config.datasets[0].gradient == pytest.approx(10e6)
    assert config.datasets[1].path == tmp_path / "abs.csv"
    assert config.datasets[1].phi0 == pytest.approx(math.pi / 2)
    with pytest.raises(cfg.ConfigError):
        cfg.parse_config({"run": {"mode": "fit-only"}, "fit_only": {"datasets": [{"path": "a"}]}})


def test_overrides_are_echoed():
    config = cfg.parse_config(_raw())
    changed = config.with_overrides(seed=99, output_dir="elsewhere", n_jobs=4, emit_plot_data=True)
    assert changed.seed == 99
    assert changed.plan.seed == 99
    assert changed.output_dir == Path("elsewhere")
    assert changed.n_jobs == 4
    assert changed.emit_plot_data
    assert changed.raw["plan"]["seed"] == 99
    assert changed.raw["run"]["output_dir"] == "elsewhere"
    assert "n_jobs" not in changed.raw["run"]
    assert config.raw["plan"]["seed"] == 11
    with pytest.raises(cfg.ConfigError):
        config.with_overrides(seed=2**64)
    with pytest.raises(cfg.ConfigError):
        config.with_overrides(n_jobs=0)


def test_load_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(_raw()), encoding="utf-8")
    config = cfg.load_config(path)
    assert config.mode == "parity-scan"
    broken = tmp_path / "broken.yaml"
    broken.write_text("run: [unclosed", encoding="utf-8")
    with pytest.raises(cfg.ConfigError):
        cfg.load_config(broken)
    with pytest.raises(cfg.ConfigError):
        cfg.load_config(tmp_path / "missing.yaml")


def test_example_configs_parse():
    config_dir = Path(__file__).parents[1] / "example_data" / "configs"
    for path in sorted(config_dir.glob("*.yaml")):
        config = cfg.load_config(path)
        assert config.mode in cfg.MODES
