#!/usr/bin/env python3
"""Writes DICOM slice fixtures with a hand-rolled encoder (stdlib only).

Outputs in the target directory:
  dicom_3slice.zip       three 2x2 slices, shuffled, deflated
  dicom_mixed.zip        same, but one slice is 3x2
  dicom_3slice.json      expected calibrated volume (x fastest)
"""
import json
import struct
import sys
import zipfile
from pathlib import Path

EXPLICIT_LE = "1.2.840.10008.1.2.1"


def element(group, elem, vr, value):
    if len(value) % 2:
        value += b"\0" if vr == "UI" else b" "
    head = struct.pack("<HH", group, elem) + vr.encode()
    if vr in ("OB", "OW", "SQ", "UN", "UT"):
        return head + b"\0\0" + struct.pack("<I", len(value)) + value
    return head + struct.pack("<H", len(value)) + value


def us(v):
    return struct.pack("<H", v)


def slice_bytes(rows, cols, spacing, z, slope, intercept, raw):
    meta = element(0x0002, 0x0010, "UI", EXPLICIT_LE.encode())
    meta = element(0x0002, 0x0000, "UL", struct.pack("<I", len(meta))) + meta
    body = b"".join([
        element(0x0020, 0x0032, "DS", f"0\\0\\{z}".encode()),
        element(0x0028, 0x0002, "US", us(1)),
        element(0x0028, 0x0010, "US", us(rows)),
        element(0x0028, 0x0011, "US", us(cols)),
        element(0x0028, 0x0030, "DS", f"{spacing[0]}\\{spacing[1]}".encode()),
        element(0x0028, 0x0100, "US", us(16)),
        element(0x0028, 0x0101, "US", us(16)),
        element(0x0028, 0x0103, "US", us(1)),
        element(0x0028, 0x1052, "DS", str(intercept).encode()),
        element(0x0028, 0x1053, "DS", str(slope).encode()),
        element(0x7FE0, 0x0010, "OW", struct.pack(f"<{len(raw)}h", *raw)),
    ])
    return b"\0" * 128 + b"DICM" + meta + body


def entry(name, compression):
    info = zipfile.ZipInfo(name, date_time=(2020, 1, 1, 0, 0, 0))
    info.compress_type = compression
    return info


def main(out_dir):
    out = Path(out_dir)
    spacing = (0.5, 0.7)  # row spacing (y), column spacing (x)
    slope, intercept = 2, -1024
    zs = [10.0, 12.5, 15.0]
    raws = [[100 * k + 10 * j + i for j in range(2) for i in range(2)] for k in range(3)]
    files = {f"slice_{k}.dcm": slice_bytes(2, 2, spacing, zs[k], slope, intercept, raws[k]) for k in range(3)}

    order = ["slice_2.dcm", "slice_0.dcm", "slice_1.dcm"]
    with zipfile.ZipFile(out / "dicom_3slice.zip", "w", zipfile.ZIP_DEFLATED) as z:
        for name in order:
            z.writestr(entry(name, zipfile.ZIP_DEFLATED), files[name])

    odd = slice_bytes(3, 2, spacing, 17.5, slope, intercept, list(range(6)))
    with zipfile.ZipFile(out / "dicom_mixed.zip", "w", zipfile.ZIP_STORED) as z:
        for name in order:
            z.writestr(entry(name, zipfile.ZIP_STORED), files[name])
        z.writestr(entry("slice_3.dcm", zipfile.ZIP_STORED), odd)

    values = [slope * v + intercept for k in range(3) for v in raws[k]]
    expected = {"dims": [2, 2, 3], "spacing": [spacing[1], spacing[0], 2.5], "values": values}
    (out / "dicom_3slice.json").write_text(json.dumps(expected, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "tests" / "data")
