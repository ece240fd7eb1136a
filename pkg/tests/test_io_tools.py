#!/usr/bin/env python

"""Tests for `spin_motion.io_tools` and the configuration layer of `spin_motion.tools`."""

import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from spin_motion import tools
from spin_motion.exceptions import ConfigError, ParseError
from spin_motion.io_tools import (
    read_scan_csv,
    read_trajectory_csv,
    scan_payload,
    write_detuning_csv,
    write_json,
    write_scan_csv,
    write_trajectory_csv,
)
from spin_motion.ms_dynamics import trajectory
from spin_motion.presets import FIG5_ETA, fig5_drive, fig5_theory
from spin_motion.scan_result import ScanResult
from spin_motion.tools import (
    RunConfig,
    load_run_config,
    read_flat_config,
    resolve_species,
)
from spin_motion.trap_params import YB171


class TmpDirMixin:
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return path


class TestScanFiles(TmpDirMixin, unittest.TestCase):
    def setUp(self):
        super().setUp()
        rng = np.random.default_rng(5)
        self.scan = ScanResult(
            2 * math.pi * np.linspace(-25e3, 25e3, 21),
            rng.uniform(0, 1, 21),
            rng.uniform(0, 0.05, 21),
        )

    def test_round_trip(self):
        path = write_scan_csv(self.scan, self.tmp / "scan.csv")
        restored = read_scan_csv(path)
        assert_array_equal(restored.p, self.scan.p)
        assert_array_equal(restored.sigma, self.scan.sigma)
        assert_allclose(restored.x, self.scan.x, rtol=1e-15)

    def test_layout(self):
        path = write_scan_csv(self.scan, self.tmp / "nested" / "scan.csv")
        raw = path.read_bytes()
        self.assertTrue(raw.startswith(b"x,p,sigma\n"))
        self.assertNotIn(b"\r", raw)
        self.assertEqual(raw.count(b"\n"), 22)

    def test_time_unit(self):
        scan = ScanResult(np.linspace(0, 1e-4, 5), np.zeros(5))
        path = write_scan_csv(scan, self.tmp / "time.csv", x_unit="us")
        self.assertIn("\n100,", path.read_text())
        assert_allclose(read_scan_csv(path, x_unit="us").x, scan.x, rtol=1e-15)

    def test_detuning_file(self):
        theory = fig5_theory()
        path = write_detuning_csv(theory, self.tmp / "fig5_scan.csv")
        self.assertTrue(path.read_text().startswith("delta_rad_s,p_f1\n"))
        restored = read_scan_csv(path)
        assert_array_equal(restored.x, theory.x)
        assert_array_equal(restored.p, theory.p)

    def test_trajectory_file(self):
        points = trajectory(fig5_drive(2 * math.pi * 5e3), FIG5_ETA, n_points=11)
        path = write_trajectory_csv(points, self.tmp / "trajectory.csv")
        t, alpha = read_trajectory_csv(path)
        assert_array_equal(t, [pt.t for pt in points])
        assert_array_equal(alpha, [pt.alpha for pt in points])

    def test_json(self):
        text = write_json(scan_payload(self.scan), self.tmp / "scan.json")
        payload = json.loads((self.tmp / "scan.json").read_text())
        self.assertEqual(json.loads(text), payload)
        self.assertEqual(payload["x_unit"], "hz")
        assert_allclose(payload["x"], self.scan.x / (2 * math.pi), rtol=1e-15)


class TestParseErrors(TmpDirMixin, unittest.TestCase):
    def assert_line(self, text, line):
        path = self.write("bad.csv", text)
        with self.assertRaises(ParseError) as ctx:
            read_scan_csv(path)
        self.assertEqual(ctx.exception.line, line)
        if line is not None:
            self.assertTrue(str(ctx.exception).startswith(f"line {line}: "))

    def test_empty_file(self):
        self.assert_line("", 1)

    def test_header_only(self):
        self.assert_line("x,p,sigma\n", 2)

    def test_wrong_header(self):
        self.assert_line("freq,prob\n1,0.5\n", 1)

    def test_non_numeric_value(self):
        self.assert_line("x,p,sigma\n1,0.5,0.01\n2,abc,0.01\n", 3)

    def test_missing_value(self):
        self.assert_line("x,p,sigma\n1,0.5,0.01\n2,0.4,0.01\n3,,0.01\n", 4)

    def test_extra_field(self):
        self.assert_line("x,p,sigma\n1,0.5,0.01\n2,0.4,0.01,7\n", 3)

    def test_probability_out_of_range(self):
        path = self.write("bad.csv", "x,p,sigma\n1,1.5,0.01\n2,0.4,0.01\n")
        with self.assertRaises(ParseError):
            read_scan_csv(path)


class TestFlatConfig(TmpDirMixin, unittest.TestCase):
    def test_values_are_typed(self):
        path = self.write(
            "run.cfg",
            "# comment\n"
            "nbar = 290  # trailing comment\n"
            "\n"
            "species: yb171\n"
            "carrier_freqs_hz = [-1.355e6, 1.355e6]\n"
            "include_sidebands = false\n"
            "scan_start = -25e3\n",
        )
        values = read_flat_config(path)
        self.assertEqual(
            values,
            {
                "nbar": 290,
                "species": "yb171",
                "carrier_freqs_hz": [-1.355e6, 1.355e6],
                "include_sidebands": False,
                "scan_start": -25e3,
            },
        )

    def test_malformed_line(self):
        path = self.write("run.cfg", "nbar = 3\njust words\n")
        with self.assertRaisesRegex(ConfigError, ":2:"):
            read_flat_config(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            read_flat_config(self.tmp / "absent.cfg")


class TestRunConfig(TmpDirMixin, unittest.TestCase):
    def test_packaged_defaults(self):
        run = load_run_config()
        self.assertEqual(run.nbar, 110.0)
        self.assertEqual(run.scan_kind, "detuning")
        self.assertEqual(run.scan_points, 501)

    def test_file_then_overrides(self):
        path = self.write("run.cfg", "nbar = 5\nseed = 3\nscan_kind = time\nscan_start = 0\n")
        run = load_run_config(path, seed=9, shots=None)
        self.assertEqual(run.nbar, 5)
        self.assertEqual(run.seed, 9)
        self.assertEqual(run.shots, 0)
        self.assertEqual(run.scan_kind, "time")

    def test_invalid(self):
        for text in ("colour = blue\n", "scan_kind = spiral\n", "scan_points = 1\n", "shots = -3\n"):
            path = self.write("run.cfg", text)
            with self.assertRaises(ConfigError):
                load_run_config(path)

    def test_update_ignores_none(self):
        run = RunConfig()
        self.assertEqual(run.update(nbar=None).nbar, run.nbar)

    def test_species(self):
        self.assertIs(resolve_species("yb171"), YB171)
        packaged = Path(tools.__file__).parent / "species.cfg"
        self.assertEqual(resolve_species(str(packaged)).label, YB171.label)
        with self.assertRaises(ConfigError):
            resolve_species("yb174")


class TestConfigPath(TmpDirMixin, unittest.TestCase):
    def tearDown(self):
        tools.set_config(None)
        super().tearDown()

    def test_set_config(self):
        path = self.write("config.yml", "n_workers: 3\n")
        tools.set_config(str(path))
        self.assertEqual(tools.get_config_path(), path)
        self.assertEqual(tools.load_config(), {"n_workers": 3})

    def test_unreadable_config(self):
        tools.set_config(str(self.tmp / "absent.yml"))
        with self.assertRaises(ConfigError):
            tools.load_config()

    def test_unit_conversions(self):
        self.assertAlmostEqual(tools.angular_to_hz(tools.hz_to_angular(268e3)), 268e3)
        self.assertAlmostEqual(tools.hz_to_angular(1.0), 2 * math.pi)
        self.assertAlmostEqual(tools.s_to_us(tools.us_to_s(180.0)), 180.0)


if __name__ == "__main__":
    unittest.main()
