"""NIfTI-1 single-file reader/writer with a byte-exact header layout.

Only the NIfTI-1 revision is handled (348-byte header, magic ``n+1`` for
single-file or ``ni1`` for header/image pairs). Gzip compression is detected
by magic bytes on read, by a ``.gz`` suffix on write; gzip streams are
written with a zeroed mtime so outputs are byte-reproducible. Data is stored
in the standard x-fastest (Fortran) voxel order. Orientation metadata is
carried through untouched; no resampling ever happens here.
"""

import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFileError,
    InvalidInputError,
    NiftiFormatError,
    UnsupportedDatatypeError,
)
from .grid import SegMask, Volume

__all__ = ["NiftiHeader", "read_volume", "write_volume", "read_mask", "write_mask"]

HEADER_SIZE = 348
VOX_OFFSET = 352  # header + 4-byte extension indicator

_MAGIC_SINGLE = b"n+1\x00"
_MAGIC_PAIR = b"ni1\x00"

# NIfTI-1 datatype codes for the supported subset.
_DTYPE_CODES = {
    "uint8": (2, 8, np.uint8),
    "int16": (4, 16, np.int16),
    "float32": (16, 32, np.float32),
    "float64": (64, 64, np.float64),
}
_CODE_TO_DTYPE = {code: (name, np.dtype(klass)) for name, (code, _, klass) in _DTYPE_CODES.items()}
_INT_MAX = {"uint8": 255, "int16": 32767}

# (name, struct format, byte offset) for every header field, in order.
_FIELDS = [
    ("sizeof_hdr", "i", 0),
    ("data_type", "10s", 4),
    ("db_name", "18s", 14),
    ("extents", "i", 32),
    ("session_error", "h", 36),
    ("regular", "c", 38),
    ("dim_info", "B", 39),
    ("dim", "8h", 40),
    ("intent_p1", "f", 56),
    ("intent_p2", "f", 60),
    ("intent_p3", "f", 64),
    ("intent_code", "h", 68),
    ("datatype", "h", 70),
    ("bitpix", "h", 72),
    ("slice_start", "h", 74),
    ("pixdim", "8f", 76),
    ("vox_offset", "f", 108),
    ("scl_slope", "f", 112),
    ("scl_inter", "f", 116),
    ("slice_end", "h", 120),
    ("slice_code", "B", 122),
    ("xyzt_units", "B", 123),
    ("cal_max", "f", 124),
    ("cal_min", "f", 128),
    ("slice_duration", "f", 132),
    ("toffset", "f", 136),
    ("glmax", "i", 140),
    ("glmin", "i", 144),
    ("descrip", "80s", 148),
    ("aux_file", "24s", 228),
    ("qform_code", "h", 252),
    ("sform_code", "h", 254),
    ("quatern_b", "f", 256),
    ("quatern_c", "f", 260),
    ("quatern_d", "f", 264),
    ("qoffset_x", "f", 268),
    ("qoffset_y", "f", 272),
    ("qoffset_z", "f", 276),
    ("srow_x", "4f", 280),
    ("srow_y", "4f", 296),
    ("srow_z", "4f", 312),
    ("intent_name", "16s", 328),
    ("magic", "4s", 344),
]


@dataclass
class NiftiHeader:
    """Parsed NIfTI-1 header fields needed to interpret the data block."""

    dim: tuple
    datatype: int
    bitpix: int
    pixdim: tuple
    vox_offset: int
    scl_slope: float
    scl_inter: float
    qform_code: int
    sform_code: int
    quatern: tuple
    qoffset: tuple
    srow: np.ndarray
    magic: bytes
    byteorder: str

    @property
    def spatial_shape(self):
        ndim = self.dim[0]
        dims = [max(int(d), 1) for d in self.dim[1 : 1 + min(ndim, 3)]]
        while len(dims) < 3:
            dims.append(1)
        return tuple(dims)

    def affine(self):
        """Voxel-to-world transform: sform if present, else qform, else
        a spacing diagonal."""
        if self.sform_code > 0:
            aff = np.eye(4)
            aff[:3, :] = self.srow
            return aff
        if self.qform_code > 0:
            return _quaternion_affine(self.quatern, self.qoffset, self.pixdim)
        aff = np.eye(4)
        for i in range(3):
            aff[i, i] = self.pixdim[1 + i] if self.pixdim[1 + i] > 0 else 1.0
        return aff


def _quaternion_affine(quatern, qoffset, pixdim):
    b, c, d = quatern
    a_sq = 1.0 - (b * b + c * c + d * d)
    a = np.sqrt(a_sq) if a_sq > 0 else 0.0
    rot = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    qfac = -1.0 if pixdim[0] < 0 else 1.0
    scales = [pixdim[1] or 1.0, pixdim[2] or 1.0, (pixdim[3] or 1.0) * qfac]
    aff = np.eye(4)
    aff[:3, :3] = rot * np.array(scales)
    aff[:3, 3] = qoffset
    return aff


def parse_header(buf):
    """Parse a 348-byte header block, detecting endianness via sizeof_hdr."""
    if len(buf) < HEADER_SIZE:
        raise NiftiFormatError(f"header block is {len(buf)} bytes; NIfTI-1 needs {HEADER_SIZE}")
    for order in ("<", ">"):
        (sizeof_hdr,) = struct.unpack_from(order + "i", buf, 0)
        if sizeof_hdr == HEADER_SIZE:
            break
    else:
        raise NiftiFormatError("sizeof_hdr is not 348 in either byte order; not a NIfTI-1 file")

    raw = {}
    for name, fmt, offset in _FIELDS:
        values = struct.unpack_from(order + fmt, buf, offset)
        raw[name] = values if len(values) > 1 else values[0]

    magic = raw["magic"]
    if magic not in (_MAGIC_SINGLE, _MAGIC_PAIR):
        raise NiftiFormatError(f"bad magic {magic!r}; expected 'n+1' or 'ni1'")
    ndim = raw["dim"][0]
    if not 1 <= ndim <= 7:
        raise NiftiFormatError(f"dim[0] = {ndim} outside [1, 7]")
    return NiftiHeader(
        dim=tuple(raw["dim"]),
        datatype=raw["datatype"],
        bitpix=raw["bitpix"],
        pixdim=tuple(raw["pixdim"]),
        vox_offset=int(round(raw["vox_offset"])),
        scl_slope=raw["scl_slope"],
        scl_inter=raw["scl_inter"],
        qform_code=raw["qform_code"],
        sform_code=raw["sform_code"],
        quatern=(raw["quatern_b"], raw["quatern_c"], raw["quatern_d"]),
        qoffset=(raw["qoffset_x"], raw["qoffset_y"], raw["qoffset_z"]),
        srow=np.array([raw["srow_x"], raw["srow_y"], raw["srow_z"]]),
        magic=magic,
        byteorder=order,
    )


def build_header(shape, spacing, datatype, scl_slope, scl_inter, affine):
    """Serialize a single-file NIfTI-1 header (348 bytes, little-endian)."""
    code, bitpix, _ = _DTYPE_CODES[datatype]
    buf = bytearray(HEADER_SIZE)

    def put(fmt, offset, *values):
        struct.pack_into("<" + fmt, buf, offset, *values)

    put("i", 0, HEADER_SIZE)
    put("c", 38, b"r")
    dim = [3, shape[0], shape[1], shape[2], 1, 1, 1, 1]
    put("8h", 40, *dim)
    put("h", 70, code)
    put("h", 72, bitpix)
    pixdim = [1.0, spacing[0], spacing[1], spacing[2], 0.0, 0.0, 0.0, 0.0]
    put("8f", 76, *pixdim)
    put("f", 108, float(VOX_OFFSET))
    put("f", 112, scl_slope)
    put("f", 116, scl_inter)
    put("B", 123, 2)  # spatial units: millimeters
    put("80s", 148, b"ulfsim")
    put("h", 254, 1)  # sform: scanner-anatomical
    aff = np.asarray(affine, dtype=np.float64)
    put("4f", 280, *aff[0, :])
    put("4f", 296, *aff[1, :])
    put("4f", 312, *aff[2, :])
    put("4s", 344, _MAGIC_SINGLE)
    return bytes(buf)


def _gunzip_if_needed(blob):
    if blob[:2] == b"\x1f\x8b":
        return gzip.decompress(blob)
    return blob


def _read_bytes(path):
    with open(path, "rb") as f:
        return _gunzip_if_needed(f.read())


def _write_bytes(path, payload):
    try:
        if str(path).endswith(".gz"):
            with open(path, "wb") as f:
                # empty name + mtime=0 keep the gzip stream byte-reproducible
                with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                    gz.write(payload)
        else:
            with open(path, "wb") as f:
                f.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _parse_blob(blob, companion_reader=None):
    """Header + raw stored array (no intensity scaling) from an in-memory
    NIfTI-1 stream. companion_reader supplies the .img blob for paired
    files; None means paired files are unsupported in this context."""
    header = parse_header(blob[:HEADER_SIZE])
    if header.datatype not in _CODE_TO_DTYPE:
        raise UnsupportedDatatypeError(f"datatype code {header.datatype} is not supported")
    ndim = header.dim[0]
    for extra in header.dim[4 : 1 + ndim]:
        if extra > 1:
            raise UnsupportedDatatypeError(f"non-singleton trailing dimensions {header.dim!r}; only 3D volumes are supported")
    shape = header.spatial_shape

    if header.magic == _MAGIC_PAIR:
        if companion_reader is None:
            raise NiftiFormatError("paired (.hdr/.img) NIfTI is not supported from byte streams")
        data_blob = companion_reader()
        offset = max(header.vox_offset, 0)
    else:
        data_blob = blob
        offset = header.vox_offset
        if offset < HEADER_SIZE:
            raise NiftiFormatError(f"vox_offset {offset} overlaps the header")

    _, dtype = _CODE_TO_DTYPE[header.datatype]
    dtype = dtype.newbyteorder(header.byteorder)
    n_expected = int(np.prod(shape)) * dtype.itemsize
    raw = data_blob[offset : offset + n_expected]
    if len(raw) < n_expected:
        raise CorruptFileError(f"data block truncated: expected {n_expected} bytes, found {len(raw)}")
    stored = np.frombuffer(raw, dtype=dtype).reshape(shape, order="F")

    spacing = tuple(float(p) if p > 0 else 1.0 for p in header.pixdim[1:4])
    return header, stored, spacing


def _companion_reader(path):
    def read_img():
        base, ext = os.path.splitext(str(path))
        if ext == ".gz":
            base, _ = os.path.splitext(base)
        img_path = base + ".img"
        if not os.path.exists(img_path) and os.path.exists(img_path + ".gz"):
            img_path += ".gz"
        if not os.path.exists(img_path):
            raise CorruptFileError(f"paired header {path} has no companion {img_path}")
        return _read_bytes(img_path)

    return read_img


def _load(path):
    return _parse_blob(_read_bytes(path), companion_reader=_companion_reader(path))


def _scaled(header, stored, spacing):
    slope = header.scl_slope if header.scl_slope not in (0.0,) else 1.0
    data = stored.astype(np.float64) * slope + header.scl_inter
    return Volume(data, spacing=spacing, affine=header.affine())


def read_volume(path):
    """Read a NIfTI-1 volume; returns intensities with scl_slope/scl_inter
    applied and spacing taken from pixdim."""
    return _scaled(*_load(path))


def read_volume_bytes(blob):
    """Parse a single-file NIfTI-1 volume from raw (optionally gzipped)
    bytes, e.g. an HTTP upload body."""
    return _scaled(*_parse_blob(_gunzip_if_needed(bytes(blob))))


def volume_bytes(volume, datatype="float32"):
    """Serialize a volume to uncompressed single-file .nii bytes.

    Integer datatypes get the same automatic slope/inter scaling as
    write_volume."""
    if datatype not in _DTYPE_CODES:
        raise InvalidInputError(f"datatype must be one of {sorted(_DTYPE_CODES)}, got {datatype!r}")
    _, _, np_type = _DTYPE_CODES[datatype]
    data = volume.data
    if datatype in _INT_MAX:
        lo, hi = float(data.min()), float(data.max())
        if hi > lo:
            slope = np.float32((hi - lo) / _INT_MAX[datatype])
            inter = np.float32(lo)
            stored = np.clip(np.round((data - float(inter)) / float(slope)), 0, _INT_MAX[datatype]).astype(np_type)
        else:
            slope, inter = np.float32(1.0), np.float32(lo)
            stored = np.zeros_like(data, dtype=np_type)
        header = build_header(data.shape, volume.spacing, datatype, float(slope), float(inter), volume.affine)
    else:
        stored = data.astype(np_type)
        header = build_header(data.shape, volume.spacing, datatype, 1.0, 0.0, volume.affine)
    return header + b"\x00\x00\x00\x00" + stored.tobytes(order="F")


def write_volume(volume, path, datatype="float32"):
    """Write a single-file .nii (gzipped when the path ends .gz).

    Integer datatypes are stored with an automatic affine intensity scaling
    slope = (max - min) / type_max, inter = min, so the round trip is exact
    up to half a quantization step.
    """
    _write_bytes(path, volume_bytes(volume, datatype))


def read_mask(path):
    """Read a label mask; labels are preserved exactly (no intensity scaling
    may be present in the file)."""
    header, stored, spacing = _load(path)
    if not np.issubdtype(stored.dtype, np.integer):
        raise NiftiFormatError(f"mask requires an integer datatype, file stores {stored.dtype}")
    if header.scl_slope not in (0.0, 1.0) or header.scl_inter != 0.0:
        raise NiftiFormatError("mask files must not carry intensity scaling")
    return SegMask(stored.astype(np.int64), spacing=spacing, affine=header.affine())


def write_mask(mask, path):
    """Write a label mask; uint8 when labels fit, int16 otherwise."""
    labels = mask.labels
    hi = int(labels.max()) if labels.size else 0
    if hi <= 255:
        datatype, np_type = "uint8", np.uint8
    elif hi <= 32767:
        datatype, np_type = "int16", np.int16
    else:
        raise InvalidInputError(f"labels up to {hi} exceed the supported mask datatypes")
    header = build_header(labels.shape, mask.spacing, datatype, 1.0, 0.0, mask.affine)
    payload = header + b"\x00\x00\x00\x00" + labels.astype(np_type).tobytes(order="F")
    _write_bytes(path, payload)
