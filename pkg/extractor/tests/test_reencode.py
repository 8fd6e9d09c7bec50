import os

import pytest

from vxtract.errors import JobError
from vxtract.extract import decode_video
from vxtract.reencode import ensure_encoder, reencode_crf


def test_invalid_crf_rejected_before_encoding(clip64, tmp_path):
    with pytest.raises(JobError):
        reencode_crf(clip64, str(tmp_path / "x.mp4"), 17)


def test_encoder_builds():
    assert ensure_encoder().exists()


def test_crf23_decodable_frame_count_preserved(clip64, tmp_path):
    out = str(tmp_path / "c23.mp4")
    reencode_crf(clip64, out, 23)
    assert len(decode_video(out)) == len(decode_video(clip64))


def test_crf50_smaller_than_crf23(clip64, tmp_path):
    p23 = reencode_crf(clip64, str(tmp_path / "c23.mp4"), 23)
    p50 = reencode_crf(clip64, str(tmp_path / "c50.mp4"), 50)
    assert os.path.getsize(p50) < os.path.getsize(p23)
