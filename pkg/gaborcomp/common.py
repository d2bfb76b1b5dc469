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

# Segments and dictionary
SEGMENT_LENGTH = 512
SAMPLE_RATE = 4000

# Pursuit
SPARSITY_LEVEL = 511
RANK_TOL = 1e-10
MIN_CORRELATION = 1e-12
UNDERFLOW = 1e-300

# Classifier
N_CHANNELS = 32
N_HEADS = 4
D_HEAD = 32
KERNEL_RATE = 1.75
KERNEL_SPAN = 6
LAYER_NORM_EPS = 1e-5

# Training
LEARNING_RATE = 0.01
MOMENTUM = 0.9
BATCH_SIZE = 150
EPOCHS = 500
SEED = 7

# Evaluation
N_FOLDS = 5
VAL_SPLIT = 0.2

# Job queues
Q_PURSUIT_JOBS = 'pursuit'
TIMEOUT = 3600 * 24
WAIT_FOR_RESULTS = 0.5  # In seconds

THREADS_ENV = 'GABORCOMP_THREADS'
