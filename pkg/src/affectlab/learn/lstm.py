"""Two-layer LSTM sequence classifier trained with momentum SGD.

Sequences are time-major [T x F] matrices, all the same length within a
dataset.  Each layer is a standard LSTM (input, forget, cell, output gates;
forget bias starts at 1 so early gradients flow).  The last timestep of the
top layer feeds a softmax head trained with cross-entropy.

Training is full-batch gradient descent with momentum, a global gradient-norm
clip, and optional early stopping on a held-out slice of the training set.
The backward pass is exact backpropagation through time; tests compare it
against central finite differences.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin

from ..validation import SpecError

DEFAULT_LAYERS = (200, 100)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LstmClassifier(BaseEstimator, ClassifierMixin):

    def __init__(self, layers=DEFAULT_LAYERS, lr=0.01, momentum=0.9,
                 epochs=300, patience=30, clip_norm=5.0, seed=0,
                 validation_fraction=0.2):
        self.layers = layers
        self.lr = lr
        self.momentum = momentum
        self.epochs = epochs
        self.patience = patience
        self.clip_norm = clip_norm
        self.seed = seed
        self.validation_fraction = validation_fraction

    # ---- parameter handling -------------------------------------------------

    def _init_params(self, n_features, n_classes, rng):
        params = {}
        m = n_features
        for l, n in enumerate(self.layers):
            wlim = np.sqrt(6.0 / (m + n))
            ulim = np.sqrt(3.0 / n)
            params[f"W{l}"] = rng.uniform(-wlim, wlim, (m, 4 * n))
            params[f"U{l}"] = rng.uniform(-ulim, ulim, (n, 4 * n))
            b = np.zeros(4 * n)
            b[n:2 * n] = 1.0
            params[f"b{l}"] = b
            m = n
        ylim = np.sqrt(6.0 / (m + n_classes))
        params["Wy"] = rng.uniform(-ylim, ylim, (m, n_classes))
        params["by"] = np.zeros(n_classes)
        return params

    # ---- forward / backward -------------------------------------------------

    def _forward(self, X):
        """X: [T, B, F] time-major batch.  Returns (top hidden seq, caches)."""
        p = self._params
        inp = X
        caches = []
        for l, n in enumerate(self.layers):
            T, B, _ = inp.shape
            zx = inp @ p[f"W{l}"] + p[f"b{l}"]
            U = p[f"U{l}"]
            hs = np.empty((T, B, n))
            cs = np.empty((T, B, n))
            gi = np.empty((T, B, n))
            gf = np.empty((T, B, n))
            gg = np.empty((T, B, n))
            go = np.empty((T, B, n))
            h = np.zeros((B, n))
            c = np.zeros((B, n))
            for t in range(T):
                z = zx[t] + h @ U
                i = expit(z[:, :n])
                f = expit(z[:, n:2 * n])
                g = np.tanh(z[:, 2 * n:3 * n])
                o = expit(z[:, 3 * n:])
                c = f * c + i * g
                h = o * np.tanh(c)
                gi[t], gf[t], gg[t], go[t] = i, f, g, o
                cs[t] = c
                hs[t] = h
            caches.append({"inp": inp, "hs": hs, "cs": cs,
                           "i": gi, "f": gf, "g": gg, "o": go})
            inp = hs
        return inp, caches

    def _loss_and_grads(self, X, onehot):
        """Cross-entropy over the last timestep plus full-BPTT gradients."""
        p = self._params
        top, caches = self._forward(X)
        B = X.shape[1]
        h_last = top[-1]
        logits = h_last @ p["Wy"] + p["by"]
        probs = _softmax(logits)
        loss = -np.mean(np.log(np.sum(probs * onehot, axis=1) + 1e-300))

        grads = {}
        dlogits = (probs - onehot) / B
        grads["Wy"] = h_last.T @ dlogits
        grads["by"] = dlogits.sum(axis=0)
        T = X.shape[0]
        dh_seq = np.zeros_like(top)
        dh_seq[-1] = dlogits @ p["Wy"].T
        for l in range(len(self.layers) - 1, -1, -1):
            cache = caches[l]
            n = self.layers[l]
            U = p[f"U{l}"]
            W = p[f"W{l}"]
            hs, cs = cache["hs"], cache["cs"]
            gi, gf, gg, go = cache["i"], cache["f"], cache["g"], cache["o"]
            dz = np.empty((T, B, 4 * n))
            dh_next = np.zeros((B, n))
            dc_next = np.zeros((B, n))
            for t in range(T - 1, -1, -1):
                dh = dh_seq[t] + dh_next
                c_prev = cs[t - 1] if t > 0 else np.zeros((B, n))
                tanh_c = np.tanh(cs[t])
                do = dh * tanh_c
                dc = dh * go[t] * (1.0 - tanh_c ** 2) + dc_next
                di = dc * gg[t]
                df = dc * c_prev
                dg = dc * gi[t]
                dz[t, :, :n] = di * gi[t] * (1.0 - gi[t])
                dz[t, :, n:2 * n] = df * gf[t] * (1.0 - gf[t])
                dz[t, :, 2 * n:3 * n] = dg * (1.0 - gg[t] ** 2)
                dz[t, :, 3 * n:] = do * go[t] * (1.0 - go[t])
                dh_next = dz[t] @ U.T
                dc_next = dc * gf[t]
            inp = cache["inp"]
            m = inp.shape[2]
            flat_in = inp.reshape(T * B, m)
            flat_dz = dz.reshape(T * B, 4 * n)
            grads[f"W{l}"] = flat_in.T @ flat_dz
            h_prev = np.concatenate([np.zeros((1, B, n)), hs[:-1]], axis=0)
            grads[f"U{l}"] = h_prev.reshape(T * B, n).T @ flat_dz
            grads[f"b{l}"] = flat_dz.sum(axis=0)
            dh_seq = dz @ W.T
        return loss, grads

    def _clip(self, grads):
        total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if self.clip_norm and total > self.clip_norm:
            scale = self.clip_norm / total
            for g in grads.values():
                g *= scale
        return grads

    # ---- training -----------------------------------------------------------

    def _stack(self, sequences):
        arrs = [np.asarray(s, dtype=np.float64) for s in sequences]
        if not arrs:
            raise SpecError("no sequences to train on")
        shape = arrs[0].shape
        if len(shape) != 2:
            raise SpecError(f"sequences must be 2-D [T x F], got {shape}")
        for k, a in enumerate(arrs):
            if a.shape != shape:
                raise SpecError(
                    f"ragged sequence lengths: sequence {k} is {a.shape}, "
                    f"expected {shape}"
                )
            if not np.all(np.isfinite(a)):
                raise SpecError(f"sequence {k} contains non-finite values")
        # [B, T, F] -> time-major [T, B, F]
        return np.stack(arrs).transpose(1, 0, 2)

    def fit(self, sequences, y):
        X = self._stack(sequences)
        y = np.asarray(y)
        T, B, F = X.shape
        if y.shape != (B,):
            raise SpecError(f"labels must be 1-D of length {B}, got {y.shape}")
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise SpecError(
                f"need at least 2 classes to train, got {self.classes_.size}"
            )
        onehot = (y[:, None] == self.classes_[None, :]).astype(np.float64)

        rng = np.random.default_rng(self.seed)
        self._params = self._init_params(F, self.classes_.size, rng)
        velocity = {k: np.zeros_like(v) for k, v in self._params.items()}

        # held-out slice for early stopping; skipped when it would be empty
        # or would strip a class from the training side
        val_idx = np.array([], dtype=np.intp)
        n_val = int(round(B * self.validation_fraction))
        if n_val >= 1 and B - n_val >= 2:
            perm = rng.permutation(B)
            cand_val, cand_train = perm[:n_val], perm[n_val:]
            if np.unique(y[cand_train]).size == self.classes_.size:
                val_idx, train_idx = cand_val, cand_train
        if val_idx.size:
            Xtr, htr = X[:, train_idx], onehot[train_idx]
            Xva, hva = X[:, val_idx], onehot[val_idx]
        else:
            Xtr, htr = X, onehot
            Xva = None

        self.loss_curve_ = []
        self.val_curve_ = []
        best_val = np.inf
        best_params = None
        stall = 0
        for epoch in range(self.epochs):
            loss, grads = self._loss_and_grads(Xtr, htr)
            if not np.isfinite(loss):
                raise SpecError(f"NaN loss at epoch {epoch}")
            self.loss_curve_.append(float(loss))
            grads = self._clip(grads)
            for k, v in self._params.items():
                velocity[k] = self.momentum * velocity[k] - self.lr * grads[k]
                v += velocity[k]
            if Xva is not None:
                val_loss = self._loss(Xva, hva)
                self.val_curve_.append(float(val_loss))
                if val_loss < best_val:
                    best_val = val_loss
                    best_params = {k: v.copy() for k, v in self._params.items()}
                    stall = 0
                else:
                    stall += 1
                    if stall > self.patience:
                        break
        if best_params is not None:
            self._params = best_params
        self.loss_curve_ = np.asarray(self.loss_curve_)
        self.val_curve_ = np.asarray(self.val_curve_)
        self.n_epochs_ = self.loss_curve_.size
        return self

    def _loss(self, X, onehot):
        top, _ = self._forward(X)
        logits = top[-1] @ self._params["Wy"] + self._params["by"]
        probs = _softmax(logits)
        return -np.mean(np.log(np.sum(probs * onehot, axis=1) + 1e-300))

    # ---- inference ----------------------------------------------------------

    def predict_proba(self, sequences):
        X = self._stack(sequences)
        if X.shape[2] != self._params["W0"].shape[0]:
            raise SpecError(
                f"classifier expects {self._params['W0'].shape[0]} features, "
                f"got {X.shape[2]}"
            )
        top, _ = self._forward(X)
        return _softmax(top[-1] @ self._params["Wy"] + self._params["by"])

    def predict(self, sequences):
        return self.classes_[np.argmax(self.predict_proba(sequences), axis=1)]
