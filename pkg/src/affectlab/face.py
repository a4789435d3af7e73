"""Facial-expression features from 49-point landmark tracks and from
per-frame face-crop embeddings.

Landmark semantics (0-based indices into the 49x2 array; "left" means the
smaller-x side of the image):

====== ==========================================================
0-4    left eyebrow, left to right
5-9    right eyebrow, left to right
10-13  nose bridge, top to bottom
14-18  nostril line, left to right (16 = nose base)
19-24  left eye: 19 outer corner, 20-21 upper lid, 22 inner
       corner, 23-24 lower lid
25-30  right eye: 25 inner corner, 26-27 upper lid, 28 outer
       corner, 29-30 lower lid
31-42  outer lip, clockwise from left corner: 31 corner,
       32-36 upper (34 = top middle), 37 right corner,
       38-42 lower (40 = bottom middle)
43-48  inner lip: 43 left corner, 44-45 upper, 46 right corner,
       47-48 lower
====== ==========================================================

The 30 geometry features are unsigned distances between the landmarks
above, each normalized by the frame's own face box: horizontal distances
by its width, vertical by its height, oblique (euclidean) by sqrt(w*h).
The full list is in GEOMETRY_NAMES order:

eyes and brows
  left/right_brow_eye_gap    brow centroid to eye centroid, vertical
  left/right_eye_openness    upper-lid midpoint to lower-lid midpoint
  left/right_eye_width       eye corner to corner, horizontal
  inter_eye_gap              eye centroid to eye centroid, horizontal
  inner_brow_gap             inner brow ends (points 4, 5), horizontal
  left/right_brow_arch       brow middle above the line of its endpoints

nose
  nose_length                bridge top (10) to nose base (16), vertical
  nose_width                 nostril line ends (14, 18), horizontal
  left/right_eye_nose        eye centroid to nose base, oblique

mouth
  mouth_width                outer lip corners (31, 37), horizontal
  outer_lip_height           top middle (34) to bottom middle (40)
  inner_lip_gap              inner-lip upper to lower midpoints, vertical
  nose_upper_lip             nose base to outer-lip top middle, vertical
  left/right_corner_nose     lip corner to nose base, oblique
  left/right_corner_pull     lip corner to nose base, horizontal
  upper/lower_lip_thickness  outer middle to inner-lip midpoint, vertical
  left/right_corner_slant    lip corner to outer-lip mid-height, vertical

cross-face
  left/right_eye_mouth       eye centroid to mouth centroid, oblique
  left/right_brow_corner     brow centroid to same-side lip corner, oblique

Aggregation over a track takes the per-feature mean, 95th percentile
(linear interpolation) and population standard deviation, ordered as all
means, then all percentiles, then all deviations (90 values).  The deep
branch embeds each 224x224 face crop, aggregates the embedding dimensions
the same way, and projects the result to at most 30 components.
"""

from __future__ import annotations

import numpy as np

from .data import FeatureBlock, N_LANDMARKS
from .validation import SpecError, check_rgb_image

_L_BROW = slice(0, 5)
_R_BROW = slice(5, 10)
_NOSTRILS = (14, 18)
_NOSE_TOP, _NOSE_BASE = 10, 16
_L_EYE = slice(19, 25)
_R_EYE = slice(25, 31)
_L_EYE_CORNERS, _R_EYE_CORNERS = (19, 22), (25, 28)
_L_EYE_UPPER, _L_EYE_LOWER = (20, 21), (23, 24)
_R_EYE_UPPER, _R_EYE_LOWER = (26, 27), (29, 30)
_LIP_L, _LIP_TOP, _LIP_R, _LIP_BOT = 31, 34, 37, 40
_INNER_UPPER, _INNER_LOWER = (44, 45), (47, 48)

GEOMETRY_NAMES = (
    "left_brow_eye_gap", "right_brow_eye_gap",
    "left_eye_openness", "right_eye_openness",
    "left_eye_width", "right_eye_width",
    "inter_eye_gap", "inner_brow_gap",
    "left_brow_arch", "right_brow_arch",
    "nose_length", "nose_width",
    "left_eye_nose", "right_eye_nose",
    "mouth_width", "outer_lip_height",
    "inner_lip_gap", "nose_upper_lip",
    "left_corner_nose", "right_corner_nose",
    "left_corner_pull", "right_corner_pull",
    "upper_lip_thickness", "lower_lip_thickness",
    "left_corner_slant", "right_corner_slant",
    "left_eye_mouth", "right_eye_mouth",
    "left_brow_corner", "right_brow_corner",
)


def frame_geometry(points, box):
    """30 normalized distances for one frame.  points: 49x2, box: (x,y,w,h)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape != (N_LANDMARKS, 2):
        raise SpecError(f"expected {N_LANDMARKS}x2 landmark array, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise SpecError("landmark coordinates must be finite")
    _, _, w, h = box
    if not (w > 0 and h > 0):
        raise SpecError(f"degenerate face box: w={w}, h={h}")
    d = np.sqrt(w * h)

    def ctr(sel):
        return pts[sel].mean(axis=0) if isinstance(sel, slice) \
            else pts[list(sel)].mean(axis=0)

    l_brow, r_brow = ctr(_L_BROW), ctr(_R_BROW)
    l_eye, r_eye = ctr(_L_EYE), ctr(_R_EYE)
    nose = pts[_NOSE_BASE]
    mouth = pts[[_LIP_L, _LIP_TOP, _LIP_R, _LIP_BOT]].mean(axis=0)
    lip_mid_y = 0.5 * (pts[_LIP_TOP, 1] + pts[_LIP_BOT, 1])

    def horiz(a, b):
        return abs(a[0] - b[0]) / w

    def vert(a, b):
        return abs(a[1] - b[1]) / h

    def obl(a, b):
        return float(np.hypot(*(a - b))) / d

    values = np.array([
        vert(l_brow, l_eye),
        vert(r_brow, r_eye),
        vert(ctr(_L_EYE_UPPER), ctr(_L_EYE_LOWER)),
        vert(ctr(_R_EYE_UPPER), ctr(_R_EYE_LOWER)),
        horiz(pts[_L_EYE_CORNERS[0]], pts[_L_EYE_CORNERS[1]]),
        horiz(pts[_R_EYE_CORNERS[0]], pts[_R_EYE_CORNERS[1]]),
        horiz(l_eye, r_eye),
        horiz(pts[4], pts[5]),
        abs(pts[2, 1] - 0.5 * (pts[0, 1] + pts[4, 1])) / h,
        abs(pts[7, 1] - 0.5 * (pts[5, 1] + pts[9, 1])) / h,
        vert(pts[_NOSE_TOP], nose),
        horiz(pts[_NOSTRILS[0]], pts[_NOSTRILS[1]]),
        obl(l_eye, nose),
        obl(r_eye, nose),
        horiz(pts[_LIP_L], pts[_LIP_R]),
        vert(pts[_LIP_TOP], pts[_LIP_BOT]),
        vert(ctr(_INNER_UPPER), ctr(_INNER_LOWER)),
        vert(nose, pts[_LIP_TOP]),
        obl(pts[_LIP_L], nose),
        obl(pts[_LIP_R], nose),
        horiz(pts[_LIP_L], nose),
        horiz(pts[_LIP_R], nose),
        vert(pts[_LIP_TOP], ctr(_INNER_UPPER)),
        vert(ctr(_INNER_LOWER), pts[_LIP_BOT]),
        abs(pts[_LIP_L, 1] - lip_mid_y) / h,
        abs(pts[_LIP_R, 1] - lip_mid_y) / h,
        obl(l_eye, mouth),
        obl(r_eye, mouth),
        obl(l_brow, pts[_LIP_L]),
        obl(r_brow, pts[_LIP_R]),
    ])
    return values


def aggregate_track(per_frame):
    """Mean, 95th percentile and std per feature across frames.

    Input: sequence of equal-length feature vectors, at least one.
    Output: concatenated [means, p95s, stds].
    """
    frames = np.asarray(per_frame, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise SpecError("aggregate_track needs at least one frame of features")
    return np.concatenate([
        frames.mean(axis=0),
        np.percentile(frames, 95.0, axis=0),
        frames.std(axis=0),
    ])


def _aggregate_names(base_names):
    return tuple(f"{agg}_{n}" for agg in ("mean", "p95", "std")
                 for n in base_names)


def face_geometry_features(track):
    """FeatureBlock of the 90 aggregated geometry features for one track."""
    if len(track.frames) < 1:
        raise SpecError(f"trial {track.trial_id}: empty landmark track")
    per_frame = [frame_geometry(f.points, f.face_box) for f in track.frames]
    return FeatureBlock(
        trial_id=track.trial_id, modality="FACE", method="face_geometry",
        names=_aggregate_names(GEOMETRY_NAMES),
        values=aggregate_track(per_frame),
    )


def face_embedding_features(frames, provider, pca, trial_id="trial"):
    """Embed each face crop, aggregate across frames, project to <= 30 dims."""
    if len(frames) < 1:
        raise SpecError(f"trial {trial_id}: no face crops to embed")
    if pca.n_components > 30:
        raise SpecError(
            f"deep-feature PCA must have <= 30 components, got {pca.n_components}"
        )
    embedded = []
    for k, img in enumerate(frames):
        check_rgb_image(img, size=(224, 224))
        try:
            embedded.append(provider.embed(img))
        except Exception as e:
            raise SpecError(
                f"embedding failed for trial {trial_id}, frame {k}: {e}"
            ) from e
    comps = pca.transform(aggregate_track(embedded)[None, :])[0]
    return FeatureBlock(
        trial_id=trial_id, modality="FACE", method="face_deep",
        names=tuple(f"deep_face_pc{k}" for k in range(comps.size)),
        values=comps,
    )
