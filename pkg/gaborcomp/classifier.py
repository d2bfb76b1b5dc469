# -*- coding: utf-8 -*-
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#

"""Transformer encoder classifier of feature stacks.

Every matrix of a stack is cut in non-overlapping patches whose size
depends on its resolution. Each patch is convolved with the filters
of its branch and linearly projected, giving one token. Tokens of
every branch are concatenated, layer-normalized and passed through
one post-norm encoder layer (multihead self-attention followed by a
per-token feedforward). The mean token feeds a linear softmax head.

Forward and backward passes are computed on whole batches and
gradients are derived by hand for this fixed architecture.
"""

import collections
import logging

import numpy as np

from .common import (D_HEAD,
                     KERNEL_RATE,
                     KERNEL_SPAN,
                     LAYER_NORM_EPS,
                     N_CHANNELS,
                     N_HEADS,
                     SEED)
from .dictionary import check_resolution
from .errors import (DimError,
                     EmptyInputError,
                     InvalidLabelError,
                     NumericalError)
from .signals import MurmurClass


logger = logging.getLogger(__name__)


N_CLASSES = len(MurmurClass)


def kernel_schedule(M):
    """Patch sizes `(h_j, w_j)` of every branch for segments of length `M`.

    Sizes follow `2**(j / 1.75)` rows by `2**(6 - j / 1.75)` columns,
    rounded half up and clamped to the shape of matrix `j`.
    """
    L = check_resolution(M)

    schedule = []
    for j in range(1, L):
        n_rows, n_cols = 2 ** j, 2 ** (L - j)
        h = int(np.floor(2.0 ** (j / KERNEL_RATE) + 0.5))
        w = int(np.floor(2.0 ** (KERNEL_SPAN - j / KERNEL_RATE) + 0.5))
        schedule.append((min(max(h, 1), n_rows), min(max(w, 1), n_cols)))
    return schedule


def token_counts(M, schedule=None):
    """Number of tokens produced by every branch."""

    L = check_resolution(M)
    schedule = schedule or kernel_schedule(M)

    counts = []
    for j, (h, w) in enumerate(schedule, start=1):
        n_rows, n_cols = 2 ** j, 2 ** (L - j)
        counts.append(-(-n_rows // h) * -(-n_cols // w))
    return counts


def parameter_shapes(M, heads, d_head, channels=N_CHANNELS):
    """Ordered names and shapes of the trainable parameters."""

    C = channels
    shapes = collections.OrderedDict()

    for j, (h, w) in enumerate(kernel_schedule(M), start=1):
        shapes['embed.conv_w.%d' % j] = (C, h, w)
        shapes['embed.conv_b.%d' % j] = (C,)
        shapes['embed.proj_w.%d' % j] = (C, C)
        shapes['embed.proj_b.%d' % j] = (C,)
    shapes['embed.norm_g'] = (C,)
    shapes['embed.norm_b'] = (C,)

    shapes['encoder.wq'] = (heads, C, d_head)
    shapes['encoder.wk'] = (heads, C, d_head)
    shapes['encoder.wv'] = (heads, C, d_head)
    shapes['encoder.wo'] = (heads * d_head, C)
    shapes['encoder.norm1_g'] = (C,)
    shapes['encoder.norm1_b'] = (C,)
    shapes['encoder.ffn_w'] = (C, C)
    shapes['encoder.ffn_b'] = (C,)
    shapes['encoder.norm2_g'] = (C,)
    shapes['encoder.norm2_b'] = (C,)

    shapes['head.w'] = (C, N_CLASSES)
    shapes['head.b'] = (N_CLASSES,)

    return shapes


class Model:
    """Trainable parameters and architecture of the classifier.

    :param params: ordered dict of parameter name -> array
    :param M: segment length
    :param heads: number of attention heads
    :param d_head: dimension of every head
    :param channels: dimension of the tokens
    :param seed: seed used to initialize the parameters
    """
    def __init__(self, params, M, heads=N_HEADS, d_head=D_HEAD,
                 channels=N_CHANNELS, seed=None):
        self.M = M
        self.J = check_resolution(M) - 1
        self.heads = heads
        self.d_head = d_head
        self.channels = channels
        self.seed = seed
        self.kernels = kernel_schedule(M)
        self.class_names = [c.label for c in MurmurClass]

        shapes = parameter_shapes(M, heads, d_head, channels)
        if list(params) != list(shapes):
            raise DimError(cause="parameters do not match the architecture")
        for name, shape in shapes.items():
            if params[name].shape != shape:
                raise DimError(cause="parameter %s has shape %s; %s expected"
                               % (name, params[name].shape, shape))
        self.params = params

    @classmethod
    def create(cls, M, heads=N_HEADS, d_head=D_HEAD, channels=N_CHANNELS, seed=SEED):
        """Create a model with freshly initialized parameters.

        Weights are drawn from the Glorot uniform distribution, biases
        are set to zero and layer-norm gains to one.
        """
        return cls(init_params(M, heads, d_head, channels, np.random.default_rng(seed)),
                   M, heads=heads, d_head=d_head, channels=channels, seed=seed)

    @property
    def n_tokens(self):
        return sum(token_counts(self.M, self.kernels))

    def copy(self):
        params = collections.OrderedDict((name, value.copy()) for name, value in self.params.items())
        return Model(params, self.M, heads=self.heads, d_head=self.d_head,
                     channels=self.channels, seed=self.seed)


def init_params(M, heads, d_head, channels, rng):
    """Initialize the parameters in their canonical order."""

    params = collections.OrderedDict()

    for name, shape in parameter_shapes(M, heads, d_head, channels).items():
        kind = name.split('.')[1]

        if kind.endswith('_g'):
            params[name] = np.ones(shape)
        elif kind == 'b' or kind.endswith('_b'):
            params[name] = np.zeros(shape)
        else:
            if kind == 'conv_w':
                fan_in, fan_out = shape[1] * shape[2], shape[0]
            elif kind in ('wq', 'wk', 'wv'):
                fan_in, fan_out = shape[1], shape[2]
            else:
                fan_in, fan_out = shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=shape)

    return params


def count_params(model):
    """Count the trainable scalars of a model.

    :returns: a tuple with the total and a dict with the count of
        the 'embedding', 'encoder' and 'head' components
    """
    components = {'embed': 'embedding', 'encoder': 'encoder', 'head': 'head'}
    breakdown = collections.OrderedDict((label, 0) for label in components.values())

    for name, value in model.params.items():
        breakdown[components[name.split('.')[0]]] += value.size

    return sum(breakdown.values()), breakdown


class TokenMatrix:
    """Tokens of a stack, one row per token.

    :param tokens: real matrix of `N x channels`
    :param boundaries: list of `(start, stop)` rows of every branch
    """
    def __init__(self, tokens, boundaries):
        self.tokens = tokens
        self.boundaries = boundaries

    @property
    def n_tokens(self):
        return self.tokens.shape[0]


def _contract(subscripts, *operands):
    return np.einsum(subscripts, *operands, optimize=True)


def _check_finite(values, stage):
    if not np.all(np.isfinite(values)):
        raise NumericalError(stage=stage)


def softmax(S, axis=-1):
    """Softmax along `axis`, stabilized subtracting the maximum."""

    S = S - np.max(S, axis=axis, keepdims=True)
    E = np.exp(S)
    return E / np.sum(E, axis=axis, keepdims=True)


def layer_norm(X, gain, bias, eps=LAYER_NORM_EPS):
    """Normalize the last axis of `X` to zero mean and unit variance.

    :returns: a tuple with the output and the cache of the backward pass
    """
    centered = X - X.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normalized = centered * inv_std
    return normalized * gain + bias, (normalized, inv_std)


def _layer_norm_backward(dY, gain, cache):
    normalized, inv_std = cache
    C = dY.shape[-1]

    dgain = (dY * normalized).reshape(-1, C).sum(axis=0)
    dbias = dY.reshape(-1, C).sum(axis=0)

    dnorm = dY * gain
    dX = inv_std * (dnorm
                    - dnorm.mean(axis=-1, keepdims=True)
                    - normalized * (dnorm * normalized).mean(axis=-1, keepdims=True))
    return dX, dgain, dbias


def _attention(Q, K, V):
    scores = Q @ np.swapaxes(K, -1, -2) / np.sqrt(Q.shape[-1])
    weights = softmax(scores, axis=-1)
    return weights @ V, weights


def attention(Q, K, V):
    """Scaled dot-product attention `softmax(Q K^T / sqrt(d)) V`.

    :raises DimError: when shapes are not conformable
    """
    Q, K, V = (np.asarray(X, dtype=np.float64) for X in (Q, K, V))

    if Q.ndim != 2 or K.ndim != 2 or V.ndim != 2 \
            or Q.shape[1] != K.shape[1] or K.shape[0] != V.shape[0]:
        raise DimError(cause="cannot attend with Q %s, K %s and V %s"
                       % (Q.shape, K.shape, V.shape))

    return _attention(Q, K, V)[0]


def _patches(A, h, w):
    """Cut a batch of matrices in zero-padded `h x w` patches.

    :returns: an array of `B x n_patches x (h * w)`, patches sorted
        row-major
    """
    B, n_rows, n_cols = A.shape
    nh, nw = -(-n_rows // h), -(-n_cols // w)

    padded = np.zeros((B, nh * h, nw * w))
    padded[:, :n_rows, :n_cols] = A

    return padded.reshape(B, nh, h, nw, w).transpose(0, 1, 3, 2, 4).reshape(B, nh * nw, h * w)


def _check_inputs(inputs, model):
    L = model.J + 1
    if len(inputs) != model.J:
        raise DimError(cause="%d matrices given; %d expected" % (len(inputs), model.J))
    for j, A in enumerate(inputs, start=1):
        if A.shape[1:] != (2 ** j, 2 ** (L - j)):
            raise DimError(cause="matrix %d has shape %s; %s expected"
                           % (j, A.shape[1:], (2 ** j, 2 ** (L - j))))


def _embed_branch(A, j, model):
    p = model.params
    h, w = model.kernels[j - 1]

    patches = _patches(A, h, w)
    filters = p['embed.conv_w.%d' % j].reshape(model.channels, h * w)
    conv = patches @ filters.T + p['embed.conv_b.%d' % j]
    tokens = conv @ p['embed.proj_w.%d' % j] + p['embed.proj_b.%d' % j]

    return tokens, (patches, conv)


def _embed(inputs, model):
    _check_inputs(inputs, model)

    blocks, caches, boundaries = [], [], []
    start = 0
    for j, A in enumerate(inputs, start=1):
        tokens, cache = _embed_branch(A, j, model)
        blocks.append(tokens)
        caches.append(cache)
        boundaries.append((start, start + tokens.shape[1]))
        start += tokens.shape[1]

    G, norm_cache = layer_norm(np.concatenate(blocks, axis=1),
                               model.params['embed.norm_g'],
                               model.params['embed.norm_b'])
    _check_finite(G, 'embedding')

    return G, {'branches': caches, 'boundaries': boundaries, 'norm': norm_cache}


def _multihead(G, model):
    p = model.params
    B, N, _ = G.shape

    Q = _contract('bnc,hcd->bhnd', G, p['encoder.wq'])
    K = _contract('bnc,hcd->bhnd', G, p['encoder.wk'])
    V = _contract('bnc,hcd->bhnd', G, p['encoder.wv'])

    O, weights = _attention(Q, K, V)
    concat = O.transpose(0, 2, 1, 3).reshape(B, N, model.heads * model.d_head)

    return concat @ p['encoder.wo'], {'Q': Q, 'K': K, 'V': V, 'weights': weights, 'concat': concat}


def _encode(G, model):
    p = model.params

    mh, mh_cache = _multihead(G, model)
    _check_finite(mh, 'attention')

    Z1, norm1 = layer_norm(G + mh, p['encoder.norm1_g'], p['encoder.norm1_b'])
    H1 = Z1 @ p['encoder.ffn_w'] + p['encoder.ffn_b']
    Z2, norm2 = layer_norm(Z1 + np.maximum(H1, 0.0), p['encoder.norm2_g'], p['encoder.norm2_b'])
    _check_finite(Z2, 'encoder')

    cache = dict(mh_cache)
    cache.update({'G': G, 'Z1': Z1, 'H1': H1, 'norm1': norm1, 'norm2': norm2})
    return Z2, cache


def _as_batch(G):
    if isinstance(G, TokenMatrix):
        G = G.tokens
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2:
        raise DimError(cause="token matrix of shape %s" % (G.shape,))
    return G[None, :, :]


def patch_embed(A, j, model):
    """Tokens of the matrix `A` of branch `j`, before normalization.

    :raises DimError: when `A` does not have the shape of branch `j`
    """
    A = np.asarray(A, dtype=np.float64)
    L = model.J + 1

    if not 1 <= j <= model.J or A.shape != (2 ** j, 2 ** (L - j)):
        raise DimError(cause="matrix of shape %s for branch %s" % (A.shape, j))

    return _embed_branch(A[None, :, :], j, model)[0][0]


def stack_inputs(stacks):
    """Batch the matrices of a list of stacks, one array per branch."""

    if not stacks:
        raise EmptyInputError(cause="no feature stacks given")
    return [np.stack([s.matrices[j] for s in stacks]) for j in range(stacks[0].J)]


def tokenize_stack(stack, model):
    """Normalized tokens of every branch of a stack.

    :returns: a `TokenMatrix`
    """
    G, cache = _embed(stack_inputs([stack]), model)
    return TokenMatrix(G[0], cache['boundaries'])


def multihead(G, model):
    """Multihead self-attention of the encoder over a token matrix."""

    return _multihead(_as_batch(G), model)[0][0]


def encoder_layer(G, model):
    """Encoder layer over a token matrix."""

    return _encode(_as_batch(G), model)[0][0]


def _forward(inputs, model):
    G, embed_cache = _embed(inputs, model)
    Z2, encoder_cache = _encode(G, model)

    pooled = Z2.mean(axis=1)
    logits = pooled @ model.params['head.w'] + model.params['head.b']
    _check_finite(logits, 'head')

    return logits, {'embed': embed_cache, 'encoder': encoder_cache,
                    'pooled': pooled, 'n_tokens': Z2.shape[1]}


def forward_batch(inputs, model):
    """Class probabilities of a batch.

    :param inputs: list with one `B x rows_j x cols_j` array per branch

    :returns: an array of `B x 4` probabilities
    """
    logits, _ = _forward(inputs, model)
    return softmax(logits, axis=-1)


def forward(stack, model):
    """Class probabilities of a feature stack.

    :raises NumericalError: when non-finite values appear on any stage
    """
    return forward_batch(stack_inputs([stack]), model)[0]


def _backward(dlogits, model, cache):
    p = model.params
    grads = {}

    grads['head.w'] = cache['pooled'].T @ dlogits
    grads['head.b'] = dlogits.sum(axis=0)
    dpooled = dlogits @ p['head.w'].T

    enc = cache['encoder']
    N = cache['n_tokens']
    dZ2 = np.repeat(dpooled[:, None, :] / N, N, axis=1)

    # Second residual block
    dU2, grads['encoder.norm2_g'], grads['encoder.norm2_b'] = \
        _layer_norm_backward(dZ2, p['encoder.norm2_g'], enc['norm2'])
    dH1 = dU2 * (enc['H1'] > 0.0)
    grads['encoder.ffn_w'] = _contract('bnc,bnk->ck', enc['Z1'], dH1)
    grads['encoder.ffn_b'] = dH1.sum(axis=(0, 1))
    dZ1 = dU2 + dH1 @ p['encoder.ffn_w'].T

    # First residual block
    dU1, grads['encoder.norm1_g'], grads['encoder.norm1_b'] = \
        _layer_norm_backward(dZ1, p['encoder.norm1_g'], enc['norm1'])
    grads['encoder.wo'] = _contract('bnk,bnc->kc', enc['concat'], dU1)
    dconcat = dU1 @ p['encoder.wo'].T

    B = dconcat.shape[0]
    dO = dconcat.reshape(B, N, model.heads, model.d_head).transpose(0, 2, 1, 3)

    weights = enc['weights']
    dweights = dO @ np.swapaxes(enc['V'], -1, -2)
    dV = np.swapaxes(weights, -1, -2) @ dO
    dscores = weights * (dweights - (dweights * weights).sum(axis=-1, keepdims=True))
    dscores /= np.sqrt(model.d_head)
    dQ = dscores @ enc['K']
    dK = np.swapaxes(dscores, -1, -2) @ enc['Q']

    dG = dU1.copy()
    for name, dX in (('encoder.wq', dQ), ('encoder.wk', dK), ('encoder.wv', dV)):
        grads[name] = _contract('bnc,bhnd->hcd', enc['G'], dX)
        dG += _contract('bhnd,hcd->bnc', dX, p[name])

    # Embedding
    emb = cache['embed']
    dX0, grads['embed.norm_g'], grads['embed.norm_b'] = \
        _layer_norm_backward(dG, p['embed.norm_g'], emb['norm'])

    for j, ((start, stop), (patches, conv)) in enumerate(zip(emb['boundaries'], emb['branches']),
                                                         start=1):
        dtokens = dX0[:, start:stop]
        grads['embed.proj_w.%d' % j] = _contract('bnc,bnk->ck', conv, dtokens)
        grads['embed.proj_b.%d' % j] = dtokens.sum(axis=(0, 1))
        dconv = dtokens @ p['embed.proj_w.%d' % j].T
        shape = p['embed.conv_w.%d' % j].shape
        grads['embed.conv_w.%d' % j] = _contract('bnc,bnp->cp', dconv, patches).reshape(shape)
        grads['embed.conv_b.%d' % j] = dconv.sum(axis=(0, 1))

    return collections.OrderedDict((name, grads[name]) for name in p)


def check_labels(labels):
    """Convert labels to class indices.

    :raises InvalidLabelError: when a label is not a valid class index
    """
    indices = []
    for label in labels:
        if isinstance(label, bool) or not isinstance(label, (int, np.integer)) \
                or not 0 <= label < N_CLASSES:
            raise InvalidLabelError(label=label)
        indices.append(int(label))
    return np.array(indices, dtype=np.int64)


def loss_and_grads_batch(inputs, labels, model):
    """Mean cross-entropy of a batch and its gradients.

    :param inputs: list with one `B x rows_j x cols_j` array per branch
    :param labels: class indices of the batch

    :returns: a tuple with the loss, the gradients (ordered as the
        parameters) and the probabilities
    """
    labels = check_labels(labels)
    B = len(labels)
    if B == 0:
        raise EmptyInputError(cause="empty batch")

    logits, cache = _forward(inputs, model)

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(log_probs)

    loss = -float(log_probs[np.arange(B), labels].mean())

    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B

    return loss, _backward(dlogits, model, cache), probs


def loss_and_grads(stacks, labels, model):
    """Mean cross-entropy of a batch of stacks and its gradients.

    :raises InvalidLabelError: when a label is out of range
    """
    if not stacks:
        raise EmptyInputError(cause="empty batch")
    loss, grads, _ = loss_and_grads_batch(stack_inputs(stacks), labels, model)
    return loss, grads
