"""Quick end-to-end check of the pywordlab extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import math
import sys
import tempfile
from pathlib import Path

import pywordlab as wl

ROOT = Path(__file__).resolve().parent.parent


def check_render():
    img = wl.render_word("cat")
    assert len(img) == wl.CANVAS_H * wl.CANVAS_W
    assert all(0.0 <= v <= 1.0 for v in img)
    assert sum(img) > 0
    assert wl.render_slots("--cat---") == img
    assert wl.render_word("cat", "B") != img
    try:
        wl.render_word("cat", "C")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown script accepted")


def check_network():
    net = wl.Network(channels=[4, 4, 8, 8], n_classes=5, seed=3)
    img = wl.render_word("dog", offset=2)
    acts = net.forward(img)
    assert set(acts) == {"V1", "V2", "V4", "IT", "H", "output"}
    assert len(acts["V1"]) == math.prod(net.layer_shape("V1"))
    logits = net.logits([img, img])
    assert len(logits) == 2 and len(logits[0]) == 5
    assert max(abs(a - b) for a, b in zip(logits[0], acts["output"])) < 1e-5
    value, grad = net.unit_gradient(img, "H", 1)
    assert abs(value - acts["H"][1]) < 1e-5
    assert len(grad) == len(img)
    net.extend_output(3)
    assert net.n_outputs == 8


def check_lasso_and_rdm():
    x = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.5], [0.3, 1.7]]
    y = [2.0 * a - b + 0.5 for a, b in x]
    coef, b0 = wl.lasso(x, y, 1e-8, tol=1e-12)
    assert abs(coef[0] - 2.0) < 1e-4 and abs(coef[1] + 1.0) < 1e-4
    assert abs(b0 - 0.5) < 1e-4
    coef, _ = wl.lasso(x, y, 100.0)
    assert coef == [0.0, 0.0]

    d = wl.rdm([[1.0, 2.0, 3.0], [2.0, 4.0, 6.1], [3.0, 1.0, 0.0], [1.0, 1.0, 1.0]])
    assert abs(d[0][0]) < 1e-12 and abs(d[0][1] - d[1][0]) < 1e-12
    assert d[0][2] > 1.0
    assert d[3][0] is None


def check_pipeline():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = ROOT / "configs" / "smoke.toml"
        out = Path(tmp) / "run"
        assert wl.run_stage("gen", config=cfg, out=out) == "ran"
        assert wl.run_stage("gen", config=cfg, out=out) == "up-to-date"
        try:
            wl.run_stage("probe", config=cfg, out=out)
        except FileNotFoundError:
            pass
        else:
            raise AssertionError("probe ran without a trained network")
        text = wl.report(config=cfg, out=out)
        assert "UNKNOWN" in text


def main():
    for check in (check_render, check_network, check_lasso_and_rdm, check_pipeline):
        check()
        print(f"ok  {check.__name__}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
