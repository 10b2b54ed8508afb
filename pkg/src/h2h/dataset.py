"""Image ingestion, dataset manifests and evaluation protocols.

Datasets are never bundled.  A manifest CSV with the header
``path,subject,session,role`` lists user-supplied images; relative paths are
resolved against ``$H2H_DATA_ROOT`` when set, else against the manifest's own
directory.  Roles are ``train``, ``test1`` and ``test2``.
"""

import csv
import hashlib
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .descriptor import descriptor_length, feature_matrix
from .errors import DataError, FormatError, ProtocolError

DATA_ROOT_ENV = "H2H_DATA_ROOT"
ROLES = ("train", "test1", "test2")
LUMA = np.array([0.299, 0.587, 0.114])
MANIFEST_FIELDS = ("path", "subject", "session", "role")


@dataclass(frozen=True)
class Protocol:
    name: str
    crop: tuple
    train_per_subject: int = None
    test_per_subject: int = None
    description: str = ""


PROTOCOLS = {
    "AR": Protocol("AR", (50, 40), 8, 6,
                   "8 non-occluded training images per subject; test1 = 6 scarf, "
                   "test2 = 6 sunglasses images per subject"),
    "EYB": Protocol("EYB", (96, 84), None, None,
                    "Extended Yale B: Subset 1 for training, Subsets 4 and 5 as "
                    "test1 and test2"),
    "LFW": Protocol("LFW", (80, 70), 4, 2,
                    "aligned LFW: first 4 images per subject train, remaining 2 test"),
    "custom": Protocol("custom", None, None, None, "crop taken from the configuration"),
}


def get_protocol(name):
    for key, proto in PROTOCOLS.items():
        if key.lower() == str(name).lower():
            return proto
    raise ProtocolError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}")


# -- images -----------------------------------------------------------------

def _to_intensity(im):
    mode = im.mode
    if mode in ("1", "P", "PA", "CMYK", "YCbCr", "LAB", "HSV"):
        im = im.convert("RGBA" if "A" in mode or "transparency" in im.info else "RGB")
        mode = im.mode
    arr = np.asarray(im)
    if mode in ("L", "LA"):
        gray = arr[..., 0] if arr.ndim == 3 else arr
        return gray.astype(np.float64) / 255.0
    if mode in ("RGB", "RGBA"):
        return arr[..., :3].astype(np.float64) @ LUMA / 255.0
    if mode.startswith("I;16") or mode == "I":
        return arr.astype(np.float64) / 65535.0
    if mode == "F":
        return arr.astype(np.float64)
    raise FormatError(f"unsupported image mode {mode}")


def fit_to_size(img, size):
    """Aspect-preserving rescale so `img` covers `size`, then centre crop."""
    h, w = size
    p, q = img.shape
    if (p, q) == (h, w):
        return img
    scale = max(h / p, w / q)
    new_p = max(h, int(round(p * scale)))
    new_q = max(w, int(round(q * scale)))
    if (new_p, new_q) != (p, q):
        resized = Image.fromarray(img.astype(np.float32)).resize(
            (new_q, new_p), Image.Resampling.BILINEAR)
        img = np.asarray(resized, dtype=np.float64)
    top = (new_p - h) // 2
    left = (new_q - w) // 2
    return np.ascontiguousarray(img[top:top + h, left:left + w])


def load_image(path, size=None):
    """Read a PGM/PNG (or any Pillow-readable) image as intensities in [0, 1].

    RGB is converted with luma weights (0.299, 0.587, 0.114).  With
    ``size=(height, width)`` the image is rescaled to cover that size and
    centre-cropped.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            img = _to_intensity(im)
    except FileNotFoundError as exc:
        raise DataError(f"image not found: {path}") from exc
    except UnidentifiedImageError as exc:
        raise FormatError(f"unsupported or corrupt image: {path}") from exc
    except OSError as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    if size is not None:
        img = fit_to_size(img, tuple(size))
    return img


def save_pgm(path, img):
    """Write intensities in [0, 1] as an 8-bit binary PGM."""
    arr = np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PPM")


# -- manifests --------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject: str
    session: str
    role: str


@dataclass
class DatasetManifest:
    entries: list
    base_dir: Path = None
    digest: str = ""

    def __len__(self):
        return len(self.entries)

    def resolve(self, entry):
        p = Path(entry.path)
        if p.is_absolute():
            return p
        root = os.environ.get(DATA_ROOT_ENV)
        if root:
            return Path(root) / p
        return (self.base_dir or Path.cwd()) / p

    def by_role(self, role):
        return [e for e in self.entries if e.role == role]

    def subjects(self, role=None):
        seen = {}
        for e in self.entries:
            if role is None or e.role == role:
                seen.setdefault(e.subject, None)
        return list(seen)

    def validate(self):
        if not self.entries:
            raise ProtocolError("manifest is empty")
        dupes = [p for p, k in Counter(e.path for e in self.entries).items() if k > 1]
        if dupes:
            raise ProtocolError(f"duplicate manifest paths: {dupes[:5]}")
        bad = sorted({e.role for e in self.entries} - set(ROLES))
        if bad:
            raise ProtocolError(f"unknown roles {bad}; expected one of {ROLES}")
        trained = set(self.subjects("train"))
        absent = [s for s in self.subjects() if s not in trained]
        if absent:
            raise ProtocolError(f"subjects without training images: {absent}")


def read_manifest(path):
    """Parse a manifest CSV.  The SHA-256 of the raw file is kept in ``digest``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    rows = list(csv.DictReader(raw.decode("utf-8").splitlines()))
    if rows and set(MANIFEST_FIELDS) - set(rows[0]):
        raise FormatError(f"manifest header must contain {MANIFEST_FIELDS}")
    entries = [ManifestEntry(r["path"].strip(), r["subject"].strip(),
                             (r.get("session") or "").strip(), r["role"].strip())
               for r in rows]
    return DatasetManifest(entries, path.parent.resolve(), hashlib.sha256(raw).hexdigest())


def write_manifest(path, entries):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            writer.writerow([e.path, e.subject, e.session, e.role])


_YALE_NAME = re.compile(r"yaleB(\d+)_P(\d+)A([+-]\d{3})E([+-]\d{2})\.pgm$", re.IGNORECASE)


def eyb_subset(azimuth, elevation):
    """Illumination subset (1-5) from the light-source angle to the camera axis."""
    angle = math.degrees(math.acos(math.cos(math.radians(azimuth)) *
                                   math.cos(math.radians(elevation))))
    angle = round(angle)
    for subset, upper in enumerate((12, 25, 50, 77), start=1):
        if angle <= upper:
            return subset
    return 5


def eyb_manifest(root):
    """Manifest entries for a cropped Extended Yale B tree under `root`.

    Files must follow the ``yaleBxx_P00A+aaaE+ee.pgm`` naming.  Ambient shots
    and subsets 2-3 are skipped; the session column holds ``subsetK``.
    """
    root = Path(root)
    entries = []
    for path in sorted(root.rglob("*")):
        m = _YALE_NAME.search(path.name)
        if not m:
            continue
        subset = eyb_subset(int(m.group(3)), int(m.group(4)))
        role = {1: "train", 4: "test1", 5: "test2"}.get(subset)
        if role:
            entries.append(ManifestEntry(str(path.relative_to(root)), f"yaleB{m.group(1)}",
                                         f"subset{subset}", role))
    return entries


# -- splits -----------------------------------------------------------------

@dataclass
class ExperimentSplit:
    x_tr: np.ndarray
    y: np.ndarray
    train_labels: list
    test_labels: list
    crop: tuple
    cell: int
    bins: int
    meta: dict = field(default_factory=dict)


def check_protocol(manifest, protocol, test_role):
    """Raise :class:`ProtocolError` if the manifest cannot serve `protocol`."""
    manifest.validate()
    if test_role not in ("test1", "test2"):
        raise ProtocolError(f"test role must be test1 or test2, got {test_role!r}")
    if not manifest.by_role(test_role):
        raise ProtocolError(f"manifest has no {test_role} images")
    problems = []
    for role, expected in (("train", protocol.train_per_subject),
                           (test_role, protocol.test_per_subject)):
        if expected is None:
            continue
        counts = Counter(e.subject for e in manifest.by_role(role))
        wrong = [s for s in manifest.subjects(role) if counts[s] != expected]
        if wrong:
            problems.append(f"{role}: expected {expected} per subject, "
                            f"mismatched subjects {wrong[:10]}")
    if problems:
        raise ProtocolError(f"{protocol.name} protocol violated; " + "; ".join(problems))


def resolve_crop(protocol, crop=None):
    if crop is not None:
        return tuple(int(v) for v in crop)
    if protocol.crop is None:
        raise ProtocolError(f"protocol {protocol.name} needs an explicit crop size")
    return protocol.crop


def load_role_images(manifest, role, crop, workers=1):
    entries = manifest.by_role(role)

    def one(e):
        return load_image(manifest.resolve(e), crop)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(one, entries))
    else:
        images = [one(e) for e in entries]
    return images, [e.subject for e in entries]


def build_split(manifest, protocol="custom", cell=8, bins=9, test_role="test1",
                crop=None, normalize=True, workers=1):
    """Extract train/test feature matrices for one protocol.

    Columns follow manifest order within each role.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = read_manifest(manifest)
    proto = get_protocol(protocol) if isinstance(protocol, str) else protocol
    check_protocol(manifest, proto, test_role)
    crop = resolve_crop(proto, crop)
    train_imgs, train_labels = load_role_images(manifest, "train", crop, workers)
    test_imgs, test_labels = load_role_images(manifest, test_role, crop, workers)
    x_tr = feature_matrix(train_imgs, cell, bins, normalize, workers)
    y = feature_matrix(test_imgs, cell, bins, normalize, workers)
    assert x_tr.shape[0] == descriptor_length(crop[0], crop[1], cell, bins)
    return ExperimentSplit(x_tr, y, train_labels, test_labels, crop, cell, bins,
                           {"protocol": proto.name, "test_role": test_role,
                            "manifest_sha256": manifest.digest})
