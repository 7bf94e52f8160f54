# -*- coding: utf-8 -*-

#
# Copyright (C) 2024 DiSK collection contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import csv
import hashlib
import json
import os
import struct
import zipfile

import numpy as np

from ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils import (
    DiskDataError,
    is_version_compatible,
)

__all__ = [
    'tensor_to_bytes',
    'tensor_from_bytes',
    'write_tensor',
    'read_tensor',
    'write_scan',
    'read_scan_arrays',
    'write_manifest',
    'read_manifest',
    'manifest_digest',
    'save_checkpoint',
    'load_checkpoint',
    'append_csv_rows',
    'write_json',
]

TENSOR_MAGIC = b"DSKT0001"
MANIFEST_NAME = "manifest.json"
CHECKPOINT_MANIFEST = "manifest.json"

CHECKPOINT_FORMAT_VERSION = "1.0.0"
COMPATIBLE_CHECKPOINT_VERSIONS = [
    "1.0.*",
]

# fixed member timestamp, keeps archives byte-identical across runs
_ZIP_DATE_TIME = (1980, 1, 1, 0, 0, 0)


def tensor_to_bytes(array):
    # type: (np.ndarray) -> bytes
    """Encode an array as a DSKT0001 container"""
    data = np.ascontiguousarray(array, dtype='<f8')
    header = json.dumps(
        {"shape": list(data.shape), "dtype": "f64", "order": "row-major"},
        sort_keys=True,
    ).encode('utf-8')
    return TENSOR_MAGIC + struct.pack('<I', len(header)) + header + data.tobytes()


def tensor_from_bytes(blob):
    # type: (bytes) -> np.ndarray
    """Decode a DSKT0001 container"""
    if blob[:8] != TENSOR_MAGIC:
        raise DiskDataError("Not a DSKT0001 tensor container")

    (header_len,) = struct.unpack('<I', blob[8:12])
    header = json.loads(blob[12:12 + header_len].decode('utf-8'))
    if header.get("dtype") != "f64" or header.get("order") != "row-major":
        raise DiskDataError(f"Unsupported tensor header {header}")

    shape = tuple(header["shape"])
    payload = blob[12 + header_len:]
    expected = int(np.prod(shape)) * 8
    if len(payload) != expected:
        raise DiskDataError(
            f"Tensor payload has {len(payload)} bytes, header {shape} requires {expected}"
        )
    return np.frombuffer(payload, dtype='<f8').reshape(shape).astype(np.float64)


def write_tensor(path, array):
    # type: (str, np.ndarray) -> None
    with open(path, 'wb') as handle:
        handle.write(tensor_to_bytes(array))


def read_tensor(path):
    # type: (str) -> np.ndarray
    if not os.path.isfile(path):
        raise DiskDataError(f"Tensor file {path} not found")
    with open(path, 'rb') as handle:
        return tensor_from_bytes(handle.read())


def write_json(path, data):
    # type: (str, dict) -> None
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_json(path):
    # type: (str) -> dict
    if not os.path.isfile(path):
        raise DiskDataError(f"File {path} not found")
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def scan_paths(folder, scan_id):
    # type: (str, str) -> tuple
    """Returns the tensor and sidecar path of a scan"""
    return (
        os.path.join(folder, f"{scan_id}.dskt"),
        os.path.join(folder, f"{scan_id}.json"),
    )


def write_scan(folder, scan_id, image, labels, seed):
    # type: (str, str, np.ndarray, np.ndarray, int) -> None
    """Write image and labels stacked as one 2 x T x H x W tensor plus sidecar"""
    tensor_path, sidecar_path = scan_paths(folder, scan_id)
    write_tensor(tensor_path, np.stack([image, labels.astype(np.float64)]))

    frames, height, width = image.shape
    write_json(sidecar_path, {
        "scan_id": scan_id,
        "T": int(frames),
        "H": int(height),
        "W": int(width),
        "seed": int(seed),
    })


def read_scan_arrays(folder, scan_id):
    # type: (str, str) -> tuple
    """Returns (image, labels, sidecar) of a stored scan"""
    tensor_path, sidecar_path = scan_paths(folder, scan_id)
    sidecar = read_json(sidecar_path)
    stacked = read_tensor(tensor_path)

    expected = (2, sidecar["T"], sidecar["H"], sidecar["W"])
    if stacked.shape != expected:
        raise DiskDataError(
            f"Scan {scan_id} has shape {list(stacked.shape)}, sidecar declares {list(expected)}"
        )
    return stacked[0], np.rint(stacked[1]).astype(np.int64), sidecar


def manifest_digest(manifest):
    # type: (dict) -> str
    canonical = json.dumps(manifest, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def write_manifest(folder, manifest):
    # type: (str, dict) -> str
    write_json(os.path.join(folder, MANIFEST_NAME), manifest)
    return manifest_digest(manifest)


def read_manifest(folder):
    # type: (str) -> dict
    path = os.path.join(folder, MANIFEST_NAME)
    if not os.path.isfile(path):
        raise DiskDataError(f"Dataset manifest not found in {folder}")
    return read_json(path)


def _write_member(archive, name, payload):
    # type: (zipfile.ZipFile, str, bytes) -> None
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE_TIME)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    archive.writestr(info, payload)


def save_checkpoint(path, manifest, tensors):
    # type: (str, dict, dict) -> None
    """Write a manifest and named DSKT0001 blobs as a deterministic zip archive"""
    manifest = dict(manifest)
    manifest["format_version"] = CHECKPOINT_FORMAT_VERSION
    manifest["tensors"] = sorted(tensors.keys())

    tmp_path = path + ".tmp"
    with zipfile.ZipFile(tmp_path, 'w') as archive:
        _write_member(
            archive,
            CHECKPOINT_MANIFEST,
            json.dumps(manifest, indent=2, sort_keys=True).encode('utf-8'),
        )
        for name in sorted(tensors.keys()):
            _write_member(archive, f"tensors/{name}.dskt", tensor_to_bytes(tensors[name]))
    os.replace(tmp_path, path)


def load_checkpoint(path):
    # type: (str) -> tuple
    """Returns (manifest, tensors) of a checkpoint archive"""
    if not os.path.isfile(path):
        raise DiskDataError(f"Checkpoint {path} not found")

    try:
        with zipfile.ZipFile(path, 'r') as archive:
            manifest = json.loads(archive.read(CHECKPOINT_MANIFEST).decode('utf-8'))

            version = manifest.get("format_version", "0.0.0")
            if not is_version_compatible(version, COMPATIBLE_CHECKPOINT_VERSIONS):
                raise DiskDataError(
                    f"Checkpoint format {version} is not one of {COMPATIBLE_CHECKPOINT_VERSIONS}"
                )

            tensors = {}
            for name in manifest.get("tensors", []):
                tensors[name] = tensor_from_bytes(archive.read(f"tensors/{name}.dskt"))

    except (zipfile.BadZipFile, KeyError) as err:
        raise DiskDataError(f"Checkpoint {path} is unreadable: {err}")

    return manifest, tensors


def append_csv_rows(path, fieldnames, rows):
    # type: (str, List[str], List[dict]) -> None
    """Append rows to a CSV file, writing the header on first use"""
    new_file = not os.path.isfile(path) or os.path.getsize(path) == 0
    with open(path, 'a', newline='', encoding='utf-8') as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, extrasaction='ignore', lineterminator="\n")
        if new_file:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_csv_rows(path):
    # type: (str) -> List[dict]
    if not os.path.isfile(path):
        raise DiskDataError(f"File {path} not found")
    with open(path, 'r', newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))
