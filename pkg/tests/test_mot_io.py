import numpy as np
import pytest

from macsort.errors import (
    BadMagic,
    MissingGeneralFile,
    NonPositiveBox,
    ParseError,
    SidecarMismatch,
    TruncatedBody,
)
from macsort.mot_io import (
    MotRecord,
    read_embeddings,
    read_mot,
    read_mot_lines,
    read_prompt_dump,
    read_prompt_dump_all,
    write_detections,
    write_embeddings,
    write_mot,
)


class TestMotCsv:
    def test_parse_canonical_line(self, tmp_path):
        p = tmp_path / "det.txt"
        p.write_text("1,1,100,50,20,40,0.9,-1,-1,-1\n")
        grouped = read_mot(p)
        rec = grouped[1][0]
        assert (rec.frame, rec.id) == (1, 1)
        assert (rec.left, rec.top, rec.width, rec.height) == (100, 50, 20, 40)
        assert rec.conf == 0.9

    def test_bbox_conversion(self):
        rec = MotRecord(1, 1, 100, 50, 20, 40, 0.9)
        box = rec.bbox()
        assert (box.u, box.v, box.w, box.h) == (110, 70, 20, 40)
        back = MotRecord.from_bbox(1, 1, box, 0.9)
        assert (back.left, back.top) == (100, 50)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("")
        assert read_mot(p) == {}

    def test_wrong_column_count(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("1,1,3,4,5\n")
        with pytest.raises(ParseError) as exc:
            read_mot(p)
        assert "line 1" in str(exc.value)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("1,1,a,b,c,d,0.5,-1,-1,-1\n")
        with pytest.raises(ParseError):
            read_mot(p)

    def test_nonpositive_box(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("1,1,0,0,0,10,0.5,-1,-1,-1\n")
        with pytest.raises(NonPositiveBox):
            read_mot(p)

    def test_frame_below_one(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("0,1,0,0,10,10,0.5,-1,-1,-1\n")
        with pytest.raises(ParseError):
            read_mot(p)

    def test_nine_column_file(self, tmp_path):
        p = tmp_path / "nine.txt"
        p.write_text("2,5,1,2,3,4,0.5,-1,-1\n")
        rec = read_mot(p)[2][0]
        assert rec.z == -1.0

    def test_write_read_write_idempotent(self, tmp_path, rng):
        records = [
            MotRecord(
                frame=int(f),
                id=int(i),
                left=round(float(rng.uniform(0, 500)), 2),
                top=round(float(rng.uniform(0, 500)), 2),
                width=round(float(rng.uniform(1, 100)), 2),
                height=round(float(rng.uniform(1, 100)), 2),
                conf=round(float(rng.uniform(0, 1)), 4),
            )
            for f in rng.integers(1, 20, 30)
            for i in [rng.integers(1, 9)]
        ]
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        write_mot(records, p1)
        write_mot(read_mot(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_write_sorts_frames(self, tmp_path):
        records = [
            MotRecord(3, 1, 0, 0, 5, 5, 1.0),
            MotRecord(1, 1, 0, 0, 5, 5, 1.0),
        ]
        p = tmp_path / "out.txt"
        write_mot(records, p)
        assert [r.frame for r in read_mot_lines(p)] == [1, 3]


class TestEmbeddings:
    def test_round_trip_bytes(self, tmp_path, rng):
        embs = rng.standard_normal((100, 128)).astype(np.float32)
        p1, p2 = tmp_path / "a.emb", tmp_path / "b.emb"
        write_embeddings(embs, p1)
        write_embeddings(read_embeddings(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_values_survive(self, tmp_path):
        embs = np.array([[1.5, -2.25], [0.0, 4.0]])
        p = tmp_path / "e.emb"
        write_embeddings(embs, p)
        assert np.array_equal(read_embeddings(p), embs)

    def test_single_row_dim_one(self, tmp_path):
        p = tmp_path / "one.emb"
        write_embeddings(np.array([[3.0]]), p)
        got = read_embeddings(p)
        assert got.shape == (1, 1) and got[0, 0] == 3.0

    def test_empty_rows(self, tmp_path):
        p = tmp_path / "zero.emb"
        write_embeddings(np.zeros((0, 7)), p)
        assert read_embeddings(p).shape == (0, 7)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.emb"
        p.write_bytes(b"NOPE" + b"\x00" * 12)
        with pytest.raises(BadMagic):
            read_embeddings(p)

    def test_truncated_body(self, tmp_path):
        p = tmp_path / "trunc.emb"
        write_embeddings(np.ones((4, 8)), p)
        data = p.read_bytes()
        p.write_bytes(data[:-5])
        with pytest.raises(TruncatedBody):
            read_embeddings(p)


def _write_prompt(seq_dir, stem, rows, embs):
    seq_dir.mkdir(parents=True, exist_ok=True)
    write_detections(
        seq_dir / f"{stem}.txt", seq_dir / f"{stem}.emb", rows, np.asarray(embs)
    )


class TestPromptDump:
    def test_general_only(self, tmp_path):
        rows = [MotRecord(1, -1, 0, 0, 10, 10, 0.8)]
        _write_prompt(tmp_path, "general", rows, [[1.0, 0.0]])
        general, include, exclude = read_prompt_dump(tmp_path, 1)
        assert len(general) == 1
        assert len(include) == 0 and len(exclude) == 0

    def test_all_three_present(self, tmp_path):
        rows = [MotRecord(1, -1, 0, 0, 10, 10, 0.8)]
        for stem in ("general", "include", "exclude"):
            _write_prompt(tmp_path, stem, rows, [[1.0, 0.0]])
        triple = read_prompt_dump(tmp_path, 1)
        assert all(len(s) == 1 for s in triple)

    def test_missing_general(self, tmp_path):
        with pytest.raises(MissingGeneralFile):
            read_prompt_dump(tmp_path, 1)

    def test_sidecar_mismatch(self, tmp_path):
        rows = [MotRecord(1, -1, 0, 0, 10, 10, 0.8)] * 2
        with pytest.raises(SidecarMismatch):
            _write_prompt(tmp_path, "general", rows, [[1.0, 0.0]])
        # bypass the checked writer to produce a corrupt pair on disk
        with open(tmp_path / "general.txt", "w") as fh:
            fh.write("1,-1,0.00,0.00,10.00,10.00,0.8000,-1,-1,-1\n" * 2)
        write_embeddings(np.ones((1, 2)), tmp_path / "general.emb")
        with pytest.raises(SidecarMismatch):
            read_prompt_dump(tmp_path, 1)

    def test_threshold_drops_rows(self, tmp_path):
        rows = [
            MotRecord(1, -1, 0, 0, 10, 10, 0.10),
            MotRecord(1, -1, 30, 0, 10, 10, 0.90),
        ]
        _write_prompt(tmp_path, "general", rows, [[1.0, 0.0], [0.0, 1.0]])
        general, _, _ = read_prompt_dump(tmp_path, 1, detection_threshold=0.2)
        assert len(general) == 1
        assert general.scores[0] == pytest.approx(0.9)
        assert np.allclose(general.features[0], [0.0, 1.0])

    def test_dump_all_covers_gap_frames(self, tmp_path):
        rows = [
            MotRecord(1, -1, 0, 0, 10, 10, 0.8),
            MotRecord(3, -1, 0, 0, 10, 10, 0.8),
        ]
        _write_prompt(tmp_path, "general", rows, [[1.0, 0.0], [0.0, 1.0]])
        dump = read_prompt_dump_all(tmp_path)
        assert sorted(dump) == [1, 2, 3]
        assert len(dump[2][0]) == 0
