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

import datetime
import enum
import json
import logging
import os

import numpy as np

from .common import THREADS_ENV


logger = logging.getLogger(__name__)


class JSONEncoder(json.JSONEncoder):
    """JSON encoder which encodes datetime, enum and numpy objects too"""

    def default(self, o):
        if isinstance(o, datetime.datetime):
            return o.isoformat()
        if isinstance(o, enum.Enum):
            return o.label if hasattr(o, 'label') else o.value
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def write_json(obj, filepath):
    """Write `obj` as sorted, indented JSON."""

    with open(filepath, 'w', encoding='utf-8') as fd:
        json.dump(obj, fd, cls=JSONEncoder, sort_keys=True, indent=2)
        fd.write('\n')


def max_threads():
    """Number of worker threads allowed for local parallelism.

    It is read from the environment variable `GABORCOMP_THREADS`;
    unset, zero or invalid values mean the number of CPUs.
    """
    value = os.environ.get(THREADS_ENV, '0')

    try:
        threads = int(value)
    except ValueError:
        logger.warning("Invalid %s value '%s'; using all CPUs", THREADS_ENV, value)
        threads = 0

    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads
