"""Click-stream container and both serialization formats."""

import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgqed.errors import DataFormatError, DomainError
from wgqed.timetags import (
    CHANNEL_CODES,
    MAGIC,
    TimeTagStream,
    read_timetags,
    read_timetags_csv,
    read_ttag,
    ttag_bytes,
    ttag_from_bytes,
    write_timetags_csv,
    write_ttag,
)


def make_stream(channel="reflection_psb", tags=(10, 250, 4000), span=10_000):
    return TimeTagStream(channel, np.asarray(tags, dtype=np.int64), span)


class TestTimeTagStream:
    def test_accepts_sorted_with_duplicates(self):
        s = make_stream(tags=(5, 5, 9))
        assert s.timestamps_ps.dtype == np.int64
        assert s.timestamps_ps.tolist() == [5, 5, 9]

    def test_unsorted_reports_index(self):
        with pytest.raises(DataFormatError) as exc:
            make_stream(tags=(10, 4, 20))
        assert exc.value.index == 1

    def test_negative_timestamp_rejected(self):
        with pytest.raises(DataFormatError):
            make_stream(tags=(-3, 5))

    def test_tag_beyond_span_rejected(self):
        with pytest.raises(DataFormatError) as exc:
            make_stream(tags=(10, 20_000))
        assert exc.value.index == 1

    def test_empty_stream_is_fine(self):
        s = make_stream(tags=())
        assert s.timestamps_ps.size == 0

    def test_bad_span(self):
        with pytest.raises(DomainError):
            make_stream(span=0)


class TestBinaryFormat:
    def test_round_trip(self):
        s = make_stream()
        back = ttag_from_bytes(ttag_bytes(s))
        assert back.channel == s.channel
        assert back.span_ps == s.span_ps
        np.testing.assert_array_equal(back.timestamps_ps, s.timestamps_ps)

    def test_round_trip_all_known_channels(self):
        for channel in CHANNEL_CODES:
            s = make_stream(channel=channel)
            assert ttag_from_bytes(ttag_bytes(s)).channel == channel

    def test_file_round_trip(self, tmp_path):
        s = make_stream(tags=(0, 1, 2, 9999), span=12345)
        path = tmp_path / "clicks.ttag"
        write_ttag(path, s)
        back = read_ttag(path)
        np.testing.assert_array_equal(back.timestamps_ps, s.timestamps_ps)
        assert back.span_ps == 12345

    def test_empty_round_trip(self):
        s = make_stream(tags=(), span=777)
        back = ttag_from_bytes(ttag_bytes(s))
        assert back.timestamps_ps.size == 0
        assert back.span_ps == 777

    @given(
        tags=st.lists(st.integers(0, 10**9), max_size=40).map(sorted),
    )
    def test_round_trip_property(self, tags):
        s = TimeTagStream("transmission", np.asarray(tags, np.int64), 10**9 + 1)
        back = ttag_from_bytes(ttag_bytes(s))
        np.testing.assert_array_equal(back.timestamps_ps, s.timestamps_ps)

    def test_header_layout_is_stable(self):
        raw = ttag_bytes(make_stream(channel="transmission", tags=(7,), span=99))
        magic, version, code, span = struct.unpack_from("<4sHHQ", raw, 0)
        assert magic == MAGIC
        assert version == 1
        assert code == CHANNEL_CODES["transmission"]
        assert span == 99
        assert struct.unpack_from("<Q", raw, 16)[0] == 7

    def test_truncated_header_offset_zero(self):
        with pytest.raises(DataFormatError) as exc:
            ttag_from_bytes(b"TT")
        assert exc.value.offset == 0

    def test_bad_magic_offset_zero(self):
        raw = b"XXXX" + ttag_bytes(make_stream())[4:]
        with pytest.raises(DataFormatError) as exc:
            ttag_from_bytes(raw)
        assert exc.value.offset == 0

    def test_bad_version_offset_four(self):
        raw = bytearray(ttag_bytes(make_stream()))
        raw[4:6] = struct.pack("<H", 9)
        with pytest.raises(DataFormatError) as exc:
            ttag_from_bytes(bytes(raw))
        assert exc.value.offset == 4

    def test_ragged_payload_points_at_partial_tag(self):
        raw = ttag_bytes(make_stream(tags=(1, 2)))
        with pytest.raises(DataFormatError) as exc:
            ttag_from_bytes(raw[:-3])
        # two whole tags survive; the partial third starts after them
        assert exc.value.offset == 16 + 8

    def test_unsorted_payload_points_at_offending_tag(self):
        header = ttag_bytes(make_stream(tags=(), span=100))[:16]
        payload = struct.pack("<3Q", 5, 50, 20)
        with pytest.raises(DataFormatError) as exc:
            ttag_from_bytes(header + payload)
        assert exc.value.offset == 16 + 8 * 2
        assert exc.value.index == 2

    def test_unknown_channel_code_named_generically(self):
        raw = bytearray(ttag_bytes(make_stream()))
        raw[6:8] = struct.pack("<H", 200)
        back = ttag_from_bytes(bytes(raw))
        assert back.channel == "channel_200"

    def test_unregistered_channel_cannot_serialize(self):
        s = TimeTagStream("mystery", np.asarray([1], np.int64), 10)
        with pytest.raises(DataFormatError):
            ttag_bytes(s)


class TestCsvFormat:
    def test_multi_channel_round_trip(self, tmp_path):
        a = make_stream(channel="transmission_hbt_a", tags=(1, 5, 5, 80))
        b = make_stream(channel="transmission_hbt_b", tags=(2, 70))
        path = tmp_path / "clicks.csv"
        write_timetags_csv(path, [a, b])
        back = read_timetags_csv(path)
        assert [s.channel for s in back] == [a.channel, b.channel]
        np.testing.assert_array_equal(back[0].timestamps_ps, a.timestamps_ps)
        np.testing.assert_array_equal(back[1].timestamps_ps, b.timestamps_ps)
        assert back[0].span_ps == a.span_ps

    def test_missing_header_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("reflection_psb,100\n")
        with pytest.raises(DataFormatError):
            read_timetags_csv(path)

    def test_bad_timestamp_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("channel,timestamp_ps\nreflection_psb,12\nreflection_psb,oops\n")
        with pytest.raises(DataFormatError) as exc:
            read_timetags_csv(path)
        assert exc.value.index == 3

    def test_per_channel_ordering_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "channel,timestamp_ps\na,10\nb,5\na,20\na,15\n"
        )
        with pytest.raises(DataFormatError) as exc:
            read_timetags_csv(path)
        assert exc.value.index == 5

    def test_interleaved_channels_are_independent(self, tmp_path):
        path = tmp_path / "ok.csv"
        path.write_text("channel,timestamp_ps\na,10\nb,5\na,20\nb,6\n")
        streams = {s.channel: s for s in read_timetags_csv(path)}
        assert streams["a"].timestamps_ps.tolist() == [10, 20]
        assert streams["b"].timestamps_ps.tolist() == [5, 6]

    def test_dispatch_by_extension(self, tmp_path):
        s = make_stream()
        binpath = tmp_path / "one.ttag"
        write_ttag(binpath, s)
        csvpath = tmp_path / "one.csv"
        write_timetags_csv(csvpath, [s])
        assert read_timetags(binpath)[0].channel == s.channel
        assert read_timetags(csvpath)[0].channel == s.channel
