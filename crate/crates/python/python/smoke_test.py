"""Smoke test for the sentinel extension module.

Build first, then run from this directory:

    cargo build --release -p sentinel-py
    cp ../../../target/release/libsentinel.so sentinel.so
    python smoke_test.py

or `maturin develop` / `pip install .` from crates/python.
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import sentinel  # noqa: E402


def main():
    tiles = sentinel.plan_tiles(1920, 1080)
    assert len(tiles) == 8, tiles

    with tempfile.TemporaryDirectory() as tmp:
        frames = os.path.join(tmp, "frames")
        assert sentinel.synthesize(frames, frames=3, seed=4) == 3
        first = sentinel.Image.load(os.path.join(frames, "frame_00000.png"))
        assert first.channels == 3

        boxes = sentinel.Detector().detect(first)
        print(f"{len(boxes)} litter boxes on {first!r}")

        manifest = json.load(open(os.path.join(frames, "manifest.json")))
        for bin_id, r in manifest["rois"].items():
            state, std, rim = sentinel.classify_bin(first, (r["x"], r["y"], r["w"], r["h"]))
            print(f"bin {bin_id}: {state} (std {std:.1f}, rim {rim:.2f})")

        tracker = sentinel.StainTracker()
        for name in sorted(os.listdir(frames)):
            if name.endswith(".png"):
                blobs = tracker.push(sentinel.Image.load(os.path.join(frames, name)))
        print(f"{len(blobs)} stain blobs after 3 frames")

        config = os.path.join(tmp, "run.json")
        with open(config, "w") as f:
            json.dump({"pipelines": ["bins", "litter", "stains", "mapping"], "input": "frames"}, f)
        report = sentinel.run(config, os.path.join(tmp, "out"))
        metrics = json.loads(sentinel.evaluate(report, os.path.join(frames, "manifest.json")))
        assert metrics["frames"] == 3
        print("metrics", metrics)

    floor = [(0.0, 0.0), (2.0, 0.0), (2.0, 3.0), (0.0, 3.0), (1.0, 1.5)]
    image = [(100 + 50 * x, 400 - 40 * y) for x, y in floor]
    h, rms = sentinel.calibrate_points(image, floor)
    assert rms < 1e-6
    x, y = h.apply((150.0, 360.0))
    assert abs(x - 1.0) < 1e-9 and abs(y - 1.0) < 1e-9
    assert sentinel.floor_distance_cm((0.0, 0.0), (3.0, 4.0)) == 500

    scene = json.dumps({"bounds": {"min": [0, 0, 0], "max": [10, 3, 10]}})
    cams = json.dumps([{"name": "a", "position": [5, 2.5, 0.2], "yaw": 0, "pitch": -0.4, "hfov": 1.4, "vfov": 1.0}])
    cov = json.loads(sentinel.coverage_report(scene, cams))
    print(f"coverage ratio {cov['coverage_ratio']:.2f}")

    print("ok")


if __name__ == "__main__":
    main()
