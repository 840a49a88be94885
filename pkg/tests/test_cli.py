import json

import numpy as np
import pytest

from _corpus import synth_digits_idx

from grig.cli import EXIT_FORMAT, EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from grig.serialize import read_dataset


@pytest.fixture(scope="module")
def idx_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("idx")
    img_b, lab_b = synth_digits_idx(60, seed=21)
    (root / "images.idx").write_bytes(img_b)
    (root / "labels.idx").write_bytes(lab_b)
    return root / "images.idx", root / "labels.idx"


@pytest.fixture(scope="module")
def converted(idx_files, tmp_path_factory):
    images, labels = idx_files
    out = tmp_path_factory.mktemp("out") / "digits.grig"
    rc = main(
        ["convert", "--format", "mnist", "--input", str(images), "--labels", str(labels),
         "--out", str(out), "--limit", "40"]
    )
    assert rc == EXIT_OK
    return out


@pytest.fixture(scope="module")
def graph_json(idx_files, tmp_path_factory):
    # Render the first digit to a PGM, then convert it to a JSON graph.
    from PIL import Image

    from grig.imaging import decode_mnist_idx

    images, labels = idx_files
    records = decode_mnist_idx(images.read_bytes(), labels.read_bytes())
    root = tmp_path_factory.mktemp("img")
    png = root / "digit.pgm"
    Image.fromarray(records[0][0].values, mode="L").save(png)
    out = root / "digit.json"
    assert main(["graph", "--input", str(png), "--out", str(out)]) == EXIT_OK
    return out


class TestConvert:
    def test_writes_dataset_and_sidecar(self, converted):
        ds = read_dataset(converted)
        assert len(ds.graphs) == 40
        assert ds.feature_dim == 10 and ds.class_count == 10
        assert ds.metadata["params"]["p_thr"] == 0.85
        assert converted.with_name(converted.name + ".meta.json").exists()

    def test_jobs_do_not_change_bytes(self, idx_files, tmp_path):
        images, labels = idx_files
        outs = []
        for jobs in ("1", "4"):
            out = tmp_path / f"j{jobs}.grig"
            rc = main(
                ["convert", "--format", "mnist", "--input", str(images), "--labels", str(labels),
                 "--out", str(out), "--limit", "30", "--jobs", jobs]
            )
            assert rc == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_repeat_runs_byte_identical(self, idx_files, tmp_path):
        images, labels = idx_files
        blobs = []
        for name in ("a.grig", "b.grig"):
            out = tmp_path / name
            main(["convert", "--format", "mnist", "--input", str(images), "--labels", str(labels),
                  "--out", str(out), "--limit", "10"])
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_missing_input_is_io_error(self, tmp_path):
        rc = main(["convert", "--format", "mnist", "--input", str(tmp_path / "nope.idx"),
                   "--labels", str(tmp_path / "nope2.idx"), "--out", str(tmp_path / "x.grig")])
        assert rc == EXIT_IO

    def test_garbage_input_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.idx"
        bad.write_bytes(b"\x00" * 64)
        rc = main(["convert", "--format", "mnist", "--input", str(bad), "--labels", str(bad),
                   "--out", str(tmp_path / "x.grig")])
        assert rc == EXIT_FORMAT

    def test_cifar_format(self, tmp_path):
        rng = np.random.default_rng(4)
        rec = bytes([3]) + rng.integers(0, 256, 3072, dtype=np.uint8).tobytes()
        src = tmp_path / "batch.bin"
        src.write_bytes(rec * 5)
        out = tmp_path / "c.grig"
        assert main(["convert", "--format", "cifar10", "--input", str(src), "--out", str(out)]) == EXIT_OK
        assert len(read_dataset(out).graphs) == 5

    def test_image_dir_format(self, tmp_path):
        from PIL import Image

        for cls, val in (("a", 30), ("b", 220)):
            d = tmp_path / "imgs" / cls
            d.mkdir(parents=True)
            Image.fromarray(np.full((9, 9), val, dtype=np.uint8), mode="L").save(d / "x.png")
        out = tmp_path / "d.grig"
        assert main(["convert", "--format", "image-dir", "--input", str(tmp_path / "imgs"),
                     "--out", str(out)]) == EXIT_OK
        ds = read_dataset(out)
        assert [rec.label for rec in ds.graphs] == [0, 1] and ds.class_count == 2


class TestUsage:
    def test_unknown_flag(self):
        assert main(["convert", "--nope"]) == EXIT_USAGE

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_transform_requires_one_op(self, graph_json, tmp_path):
        out = tmp_path / "t.json"
        assert main(["transform", "--in", str(graph_json), "--out", str(out)]) == EXIT_USAGE
        assert main(["transform", "--in", str(graph_json), "--out", str(out),
                     "--flip-h", "--flip-v"]) == EXIT_USAGE


class TestTransformCommands:
    def test_flip_twice_is_identity(self, graph_json, tmp_path):
        once = tmp_path / "once.json"
        twice = tmp_path / "twice.json"
        assert main(["transform", "--in", str(graph_json), "--out", str(once), "--flip-h"]) == EXIT_OK
        assert main(["transform", "--in", str(once), "--out", str(twice), "--flip-h"]) == EXIT_OK
        assert twice.read_text() == graph_json.read_text()

    def test_rotate_with_center(self, graph_json, tmp_path):
        out = tmp_path / "rot.json"
        assert main(["transform", "--in", str(graph_json), "--out", str(out),
                     "--rotate", "90", "--center", "13.5,13.5"]) == EXIT_OK
        assert json.loads(out.read_text())["width"] == 28

    def test_upsample_seeded(self, graph_json, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert main(["transform", "--in", str(graph_json), "--out", str(out),
                         "--upsample", "4", "--seed", "9"]) == EXIT_OK
        assert a.read_text() == b.read_text()

    def test_downsample(self, graph_json, tmp_path):
        out = tmp_path / "d.json"
        assert main(["transform", "--in", str(graph_json), "--out", str(out), "--downsample", "2"]) == EXIT_OK
        n_in = len(json.loads(graph_json.read_text())["nodes"])
        assert len(json.loads(out.read_text())["nodes"]) == n_in - 2

    def test_subgraph(self, graph_json, tmp_path):
        out = tmp_path / "s.json"
        assert main(["subgraph", "--in", str(graph_json), "--rect", "4,4,20,20", "--out", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["width"] == 17 and doc["height"] == 17
        assert main(["subgraph", "--in", str(graph_json), "--rect", "4,4", "--out", str(out)]) == EXIT_USAGE

    def test_corrupt_json_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{]")
        assert main(["transform", "--in", str(bad), "--out", str(tmp_path / "o.json"), "--flip-h"]) == EXIT_FORMAT


class TestViz:
    def test_svg_deterministic(self, graph_json, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        for out in (a, b):
            assert main(["viz", "--in", str(graph_json), "--out", str(out)]) == EXIT_OK
        assert a.read_text() == b.read_text()
        text = a.read_text()
        assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
        assert "<rect" in text and "<circle" in text

    def test_svg_with_image_underlay(self, graph_json, tmp_path):
        src = graph_json.parent / "digit.pgm"
        out = tmp_path / "u.svg"
        assert main(["viz", "--in", str(graph_json), "--image", str(src), "--out", str(out)]) == EXIT_OK
        assert "data:image/png;base64," in out.read_text()


class TestStatsVerify:
    def test_stats_reports(self, converted, capsys):
        assert main(["stats", "--in", str(converted)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "graphs: 40" in out
        assert "regions per pixel" in out
        assert "pixels per region" in out

    def test_verify_clean(self, converted, idx_files):
        images, labels = idx_files
        rc = main(["verify", "--in", str(converted), "--format", "mnist",
                   "--input", str(images), "--labels", str(labels)])
        assert rc == EXIT_OK

    def test_verify_catches_tampering(self, converted, idx_files, tmp_path):
        import struct
        import zlib

        images, labels = idx_files
        blob = bytearray(converted.read_bytes())
        # Flip one feature byte and rewrite a valid checksum, so only the
        # semantic comparison can catch it.
        blob[40] ^= 0x10
        body = bytes(blob[:-4])
        tampered = tmp_path / "tampered.grig"
        tampered.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
        rc = main(["verify", "--in", str(tampered), "--format", "mnist",
                   "--input", str(images), "--labels", str(labels)])
        assert rc == EXIT_VERIFY

    def test_corrupt_grig_is_format_error(self, converted, idx_files):
        images, labels = idx_files
        blob = bytearray(converted.read_bytes())
        blob[-1] ^= 0xFF
        bad = converted.with_name("crc.grig")
        bad.write_bytes(bytes(blob))
        rc = main(["verify", "--in", str(bad), "--format", "mnist",
                   "--input", str(images), "--labels", str(labels)])
        assert rc == EXIT_FORMAT


class TestBench:
    def test_smoke(self, capsys):
        assert main(["bench", "--sizes", "16,32", "--trials", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "fitted exponent" in out


class TestJobsEnv:
    def test_grig_jobs_env_default(self, idx_files, tmp_path, monkeypatch):
        images, labels = idx_files
        monkeypatch.setenv("GRIG_JOBS", "2")
        out = tmp_path / "env.grig"
        assert main(["convert", "--format", "mnist", "--input", str(images),
                     "--labels", str(labels), "--out", str(out), "--limit", "8"]) == EXIT_OK
        ref = tmp_path / "ref.grig"
        main(["convert", "--format", "mnist", "--input", str(images), "--labels", str(labels),
              "--out", str(ref), "--limit", "8", "--jobs", "1"])
        assert out.read_bytes() == ref.read_bytes()


@pytest.mark.skipif("not __import__('_corpus').using_real_mnist()",
                    reason="set GRIG_MNIST_DIR to run against the official dataset")
class TestRealMnist:
    def test_full_test_set_converts(self, tmp_path):
        from _corpus import real_mnist_paths

        images, labels = real_mnist_paths()
        out = tmp_path / "mnist.grig"
        rc = main(["convert", "--format", "mnist", "--input", str(images),
                   "--labels", str(labels), "--out", str(out)])
        assert rc == EXIT_OK
        ds = read_dataset(out)
        assert len(ds.graphs) == 10000
