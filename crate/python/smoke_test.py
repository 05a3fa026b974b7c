#!/usr/bin/env python3
"""Build the stillness_py extension, import it, and exercise the main ops.

Run from anywhere:  python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "stillness-py", "--release"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "libstillness_py.so"
    stage = Path(tempfile.mkdtemp(prefix="stillness_py_"))
    dest = stage / "stillness_py.so"
    shutil.copy2(built, dest)
    return stage


def approx(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def main() -> None:
    sys.path.insert(0, str(build_extension()))
    import stillness_py as sp

    # Condition metadata and audio mapping.
    assert sp.condition_label(3, 0) == ("viscosity", "no musical control")
    assert sp.condition_label(0, 1) == ("zero force", "musical control")
    assert approx(sp.pitch_of_z(0.0), 440.0)
    assert approx(sp.pitch_of_z(3.0), 880.0)  # 4 semitones/mm: +12 per 3 mm

    # Shapiro-Wilk against a frozen reference pair.
    w, p = sp.shapiro_wilk([float(i) for i in range(1, 6)])
    assert approx(w, 0.986762155211559)
    assert approx(p, 0.9671739349728582)

    # ANOVA against a frozen reference.
    f, p, dfb, dfw = sp.one_way_anova(
        [[1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0], [5.0, 6.0, 7.0, 8.0]]
    )
    assert (dfb, dfw) == (2, 9)
    assert approx(f, 10.4, 1e-9)
    assert approx(p, 0.004572125092826608)

    # Spectral exactness on a bin-aligned cosine.
    z = [5.0 + 0.4 * math.cos(2 * math.pi * 3.0 * i / 4000.0) for i in range(16000)]
    s = sp.dft_pp(z)
    assert approx(s.df_hz, 0.25)
    assert approx(s.pp_mm[11], 0.800)
    assert approx(s.mean_mm, 5.0, 1e-6)
    assert s.maxfreq() == 3.0
    assert approx(sp.travel_amplitude(z), 0.8)
    jb, jb_p = sp.jarque_bera(z)
    assert approx(jb_p, math.exp(-jb / 2.0))
    slope, lin_r2 = sp.linear_fit(z)
    assert abs(slope) < 1e-3 and lin_r2 < 0.01
    assert 0.95 < sp.poly40_adj_r2(z) < 1.0

    # Tremor synthesis closes the loop: its spectrum refits to c = 3/17.
    tremor = sp.generate_tremor(1, drift=False)
    assert len(tremor) == 16000
    assert abs(sum(tremor)) / len(tremor) < 1e-9
    c = sp.dft_pp(tremor).fit_one_over_f(0.25, 30.0)
    assert approx(c, sp.TREMOR_C_MM_HZ)
    assert approx(sp.TREMOR_C_MM_HZ, 3.0 / 17.0)

    # Full simulation: deterministic, in-workspace, report renders.
    run = sp.simulate(0, 0, seed=7)
    again = sp.simulate(0, 0, seed=7)
    assert run.z_mm == again.z_mm
    assert len(run) == 16000
    assert all(0.0 <= v <= 10.0 for v in run.z_mm)
    stats = run.stats()
    assert 0.0 < stats["travel_mm"] < 5.0
    report = run.report()
    assert report.startswith("CONDITION 0,0\n\n")
    assert "z_travel_amplitude : " in report
    assert ">=threshold_maxfreq: " in report

    # Packaged amplitude table: the archival Shapiro-Wilk pair reproduces.
    table = sp.load_amplitude_table(str(ROOT / "data" / "travel_amplitudes.csv"))
    assert len(table) == 12 and all(len(v) == 24 for v in table.values())
    w, p = sp.shapiro_wilk(table["condition00"])
    assert f"{w:.3f} {p:.3f}" == "0.954 0.333"

    try:
        from scipy import stats as sps
    except ImportError:
        print("scipy not available; skipped cross-check")
    else:
        for name, values in table.items():
            ours = sp.shapiro_wilk(values)
            ref = sps.shapiro(values)
            assert approx(ours[0], ref.statistic, 1e-4), name
            assert approx(ours[1], ref.pvalue, 1e-4), name
        print("scipy cross-check passed for all 12 groups")

    print("smoke test passed")


if __name__ == "__main__":
    main()
