"""Regenerate the static JSON resources shipped with the package.

Electrode tables use the idealised 10-20 sphere: theta is the angle from the
vertex in degrees, alpha the azimuth from the nose (clockwise positive toward
the right ear).  Azimuthal-equidistant projection with r = theta/100 keeps the
outer ring at 0.92, inside the unit disc.
"""

import json
import math
import pathlib

RES = pathlib.Path(__file__).resolve().parents[1] / "src" / "affectlab" / "resources"

# name: (theta_deg, azimuth_deg)
ELECTRODES = {
    "Fp1": (92, -18), "Fp2": (92, 18),
    "AF3": (74, -21), "AF4": (74, 21),
    "F7": (92, -54), "F8": (92, 54),
    "F3": (60, -39), "F4": (60, 39),
    "Fz": (46, 0),
    "FC5": (71, -69), "FC6": (71, 69),
    "FC1": (32, -45), "FC2": (32, 45),
    "T7": (92, -90), "T8": (92, 90),
    "C3": (46, -90), "C4": (46, 90),
    "Cz": (0, 0),
    "CP5": (71, -111), "CP6": (71, 111),
    "CP1": (32, -135), "CP2": (32, 135),
    "P7": (92, -126), "P8": (92, 126),
    "P3": (60, -141), "P4": (60, 141),
    "Pz": (46, 180),
    "PO3": (74, -159), "PO4": (74, 159),
    "O1": (92, -162), "O2": (92, 162),
    "Oz": (92, 180),
}

MONTAGE_32 = [
    "Fp1", "AF3", "F7", "F3", "FC1", "FC5", "T7", "C3", "CP1", "CP5",
    "P7", "P3", "Pz", "PO3", "O1", "Oz", "O2", "PO4", "P4", "P8",
    "CP6", "CP2", "C4", "T8", "FC6", "FC2", "F4", "F8", "AF4", "Fp2",
    "Fz", "Cz",
]

MONTAGE_14 = [
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8",
    "FC6", "F4", "F8", "AF4",
]


def project(theta, alpha):
    r = theta / 100.0
    a = math.radians(alpha)
    return round(r * math.sin(a), 6), round(r * math.cos(a), 6)


def montage(name, channels):
    rows = []
    for ch in channels:
        u, v = project(*ELECTRODES[ch])
        rows.append({"name": ch, "u": u, "v": v})
    return {"name": name, "electrodes": rows}


# Anchor colours of the MATLAB parula map, evenly spaced in [0, 1].
PARULA_ANCHORS = [
    (0.2422, 0.1504, 0.6603),
    (0.2810, 0.3228, 0.9579),
    (0.1786, 0.5289, 0.9682),
    (0.0689, 0.6948, 0.8394),
    (0.1098, 0.7799, 0.6384),
    (0.3952, 0.8041, 0.3954),
    (0.6720, 0.7793, 0.2227),
    (0.9139, 0.7258, 0.1702),
    (0.9769, 0.9839, 0.0805),
]


def parula64():
    out = []
    n_seg = len(PARULA_ANCHORS) - 1
    for i in range(64):
        t = i / 63.0
        pos = t * n_seg
        j = min(int(pos), n_seg - 1)
        f = pos - j
        a, b = PARULA_ANCHORS[j], PARULA_ANCHORS[j + 1]
        out.append([round(a[k] + f * (b[k] - a[k]), 6) for k in range(3)])
    return out


def main():
    RES.mkdir(parents=True, exist_ok=True)
    for name, chans in (("montage32", MONTAGE_32), ("montage14", MONTAGE_14)):
        path = RES / f"{name}.json"
        path.write_text(json.dumps(montage(name, chans), indent=2) + "\n")
        print("wrote", path)
    path = RES / "parula64.json"
    path.write_text(json.dumps(parula64()) + "\n")
    print("wrote", path)


if __name__ == "__main__":
    main()
