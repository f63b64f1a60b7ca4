"""Smoke test for the curvedchain_py extension.

Run after `cargo build -p curvedchain-py` (or `maturin develop -m crates/python/Cargo.toml`):

    python3 python/smoke_test.py
"""

import importlib.machinery
import importlib.util
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import curvedchain_py

        return curvedchain_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libcurvedchain_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("curvedchain_py", str(lib))
            spec = importlib.util.spec_from_loader("curvedchain_py", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("curvedchain_py not found; build it with `cargo build -p curvedchain-py`")


def main():
    cc = load()

    uniform = cc.profile("uniform", 80)
    assert uniform == [1.0] * 79
    t, left, right = cc.light_cone(uniform, 40.0, 1.0, n_samples=3)[-1]
    assert (t, left, right) == (1.0, 32.0, 48.0), (t, left, right)

    bent = cc.profile("horizon", 80)
    lo, hi = cc.horizons(bent)
    for _, left, right in cc.light_cone(bent, 40.0, 20.0):
        assert lo < left and right < hi

    qasm = cc.quench_qasm(cc.profile("uniform", 4), 0.5, [2, 4], 1)
    assert qasm.startswith("OPENQASM 2.0;")
    assert sum(line.startswith("cx ") for line in qasm.splitlines()) == 9

    assert "fig2b" in cc.presets()
    files = cc.simulate(cc.preset_config("fig5"), workers=2)
    assert files["magnetization_background.csv"].startswith("step,t,site,value,stderr\n")
    diff = files["residual_difference.csv"].splitlines()[1:]
    assert max(abs(float(row.split(",")[3])) for row in diff) < 1e-12

    config = cc.preset_config("fig2a").replace('backend = "statevector"', 'backend = "freefermion"')
    try:
        cc.simulate(config)
    except cc.CapabilityError as e:
        assert "delta" in str(e)
    else:
        raise AssertionError("interacting chain accepted by freefermion")

    try:
        cc.simulate(cc.preset_config("fig2a") + "\nbogus = 1\n")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config key accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
