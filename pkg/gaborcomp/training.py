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

import collections
import logging

import numpy as np

from .classifier import (Model,
                         check_labels,
                         forward_batch,
                         init_params,
                         loss_and_grads_batch,
                         stack_inputs)
from .common import D_HEAD, N_CHANNELS, N_HEADS
from .config import TrainConfig
from .errors import DegenerateDatasetError, EmptyInputError, InvalidLabelError
from .signals import MurmurClass


logger = logging.getLogger(__name__)

# Number of stacks evaluated at once when predicting
PREDICT_CHUNK = 256


EpochMetrics = collections.namedtuple('EpochMetrics',
                                      ['epoch', 'train_loss', 'train_acc', 'val_loss', 'val_acc'])


def sgdm_step(model, grads, state, cfg):
    """Apply one heavy-ball momentum step.

    Velocities are updated as `v = momentum * v + grad` and parameters
    as `p = p - learning_rate * v`. Neither the model nor the state
    given are modified.

    :param model: current `Model`
    :param grads: gradients, keyed by parameter name
    :param state: velocities keyed by parameter name, or `None` to
        start from zero velocities
    :param cfg: `TrainConfig`

    :returns: a tuple with the updated model and state
    """
    params = collections.OrderedDict()
    velocities = collections.OrderedDict()

    for name, value in model.params.items():
        velocity = grads[name] if state is None else cfg.momentum * state[name] + grads[name]
        velocities[name] = velocity
        params[name] = value - cfg.learning_rate * velocity

    updated = Model(params, model.M, heads=model.heads, d_head=model.d_head,
                    channels=model.channels, seed=model.seed)
    return updated, velocities


def dataset_labels(stacks):
    """Class indices of a list of labeled stacks.

    :raises InvalidLabelError: when a stack has no label
    """
    for stack in stacks:
        if stack.label is None:
            raise InvalidLabelError(label=None)
    return check_labels([int(stack.label) for stack in stacks])


def _evaluate(inputs, labels, model):
    n = len(labels)
    probs = np.vstack([forward_batch([A[i:i + PREDICT_CHUNK] for A in inputs], model)
                       for i in range(0, n, PREDICT_CHUNK)])
    loss = -float(np.mean(np.log(probs[np.arange(n), labels])))
    accuracy = float(np.mean(np.argmax(probs, axis=1) == labels))
    return loss, accuracy


def train(stacks, cfg=None, heads=N_HEADS, d_head=D_HEAD, validation=None,
          channels=N_CHANNELS):
    """Train a classifier on a list of labeled feature stacks.

    Initialization and the shuffling of every epoch are seeded from
    `cfg.seed`, so the result is a pure function of the dataset order,
    the configuration and the architecture.

    Training loss and accuracy of an epoch are averaged over its
    batches, measured before each update. Validation metrics are
    measured at the end of the epoch.

    :param stacks: list of labeled `FeatureStack`
    :param cfg: `TrainConfig`; defaults are used when `None`
    :param heads: number of attention heads
    :param d_head: dimension of every head
    :param validation: optional list of labeled stacks
    :param channels: dimension of the tokens

    :returns: a tuple with the trained `Model` and the list of
        `EpochMetrics`

    :raises DegenerateDatasetError: when less than two classes are
        present in the dataset
    """
    cfg = cfg or TrainConfig()

    if not stacks:
        raise EmptyInputError(cause="no stacks to train with")

    labels = dataset_labels(stacks)
    if len(np.unique(labels)) < 2:
        raise DegenerateDatasetError(cause="only class %s found"
                                     % MurmurClass(int(labels[0])).label)

    M = stacks[0].M
    inputs = stack_inputs(stacks)

    if validation:
        val_inputs = stack_inputs(validation)
        val_labels = dataset_labels(validation)

    init_seq, shuffle_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    model = Model(init_params(M, heads, d_head, channels, np.random.default_rng(init_seq)),
                  M, heads=heads, d_head=d_head, channels=channels, seed=cfg.seed)
    rng = np.random.default_rng(shuffle_seq)

    n = len(labels)
    state = None
    history = []

    logger.info("Training with %d stacks; heads=%d, d_head=%d, epochs=%d, batch=%d",
                n, heads, d_head, cfg.epochs, cfg.batch_size)

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        hits = 0

        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads, probs = loss_and_grads_batch([A[batch] for A in inputs],
                                                      labels[batch], model)
            total_loss += loss * len(batch)
            hits += int(np.sum(np.argmax(probs, axis=1) == labels[batch]))
            model, state = sgdm_step(model, grads, state, cfg)

        val_loss = val_acc = None
        if validation:
            val_loss, val_acc = _evaluate(val_inputs, val_labels, model)

        metrics = EpochMetrics(epoch, total_loss / n, hits / n, val_loss, val_acc)
        history.append(metrics)

        logger.debug("Epoch %d; train loss %.6f, train acc %.4f, val loss %s, val acc %s",
                     epoch, metrics.train_loss, metrics.train_acc, val_loss, val_acc)

    logger.info("Training finished; train loss %.6f, train acc %.4f",
                history[-1].train_loss, history[-1].train_acc)

    return model, history


def predict_batch(stacks, model):
    """Predicted classes and probabilities of a list of stacks.

    :returns: a tuple with the array of class indices and the
        `n x 4` array of probabilities
    """
    inputs = stack_inputs(stacks)
    n = len(stacks)
    probs = np.vstack([forward_batch([A[i:i + PREDICT_CHUNK] for A in inputs], model)
                       for i in range(0, n, PREDICT_CHUNK)])
    return np.argmax(probs, axis=1), probs


def predict(stack, model):
    """Predicted class of a stack; ties go to the lowest class index.

    :returns: a tuple with the `MurmurClass` and the probabilities
    """
    classes, probs = predict_batch([stack], model)
    return MurmurClass(int(classes[0])), probs[0]
