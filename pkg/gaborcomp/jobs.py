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

import functools
import logging
import os
import uuid

import rq

from grimoirelab_toolkit.datetime import datetime_utcnow

from .config import PursuitConfig
from .errors import FormatError
from .formats import read_dictionary
from .pursuit import comp_joint, comp_single


logger = logging.getLogger(__name__)


class PursuitJobResult:
    """Class to store the result of a pursuit job.

    It stores the sparse codes of the segments decomposed by the
    job, together with the job and group identifiers.

    :param job_id: job identifier
    :param group_id: identifier of the group of segments of the job
    :param refs: references of the decomposed segments
    :param joint: whether segments were decomposed jointly
    """
    def __init__(self, job_id, group_id, refs, joint):
        self.job_id = job_id
        self.group_id = group_id
        self.refs = refs
        self.joint = joint
        self.codes = []
        self.started_at = None
        self.finished_at = None

    def to_dict(self):
        """Convert object to a dict"""

        result = {
            'job_id': self.job_id,
            'group_id': self.group_id,
            'joint': self.joint,
            'refs': list(self.refs)
        }

        if self.codes:
            result['atoms'] = [len(code.support) for code in self.codes]
            result['residual_norms'] = [code.residual_norms[-1] for code in self.codes]
        if self.started_at and self.finished_at:
            result['started_at'] = self.started_at
            result['elapsed'] = (self.finished_at - self.started_at).total_seconds()

        return result


@functools.lru_cache(maxsize=4)
def _cached_dictionary(dict_path, mtime, size):
    return read_dictionary(dict_path)


def load_dictionary(dict_path):
    """Read a dictionary once per process and file version."""

    try:
        stat = os.stat(dict_path)
    except FileNotFoundError:
        raise FormatError(artifact=dict_path, cause="file not found")
    return _cached_dictionary(dict_path, stat.st_mtime_ns, stat.st_size)


def generate_job_id(group_id):
    return '-'.join(['gaborcomp', str(group_id), str(uuid.uuid4())])


def execute_pursuit_job(dict_path, group_id, refs, samples, pursuit_cfg, joint):
    """Decompose a group of segments.

    It runs on rq workers as well as on local threads. When `joint`
    is set, segments are decomposed with a shared support; otherwise
    every segment is decomposed on its own.

    :param dict_path: path to the dictionary file
    :param group_id: identifier of the group
    :param refs: references of the segments
    :param samples: list of real vectors, one per segment
    :param pursuit_cfg: dict with the pursuit configuration
    :param joint: decompose the segments jointly

    :returns: a `PursuitJobResult` instance

    :raises FormatError: when the dictionary cannot be read
    """
    rq_job = rq.get_current_job()
    job_id = rq_job.id if rq_job else generate_job_id(group_id)

    cfg = PursuitConfig.from_dict(pursuit_cfg)
    dictionary = load_dictionary(dict_path)

    result = PursuitJobResult(job_id, group_id, refs, joint)
    result.started_at = datetime_utcnow()

    logger.debug("Running job #%s (group: %s) with %d segments", job_id, group_id, len(refs))

    if joint:
        result.codes = comp_joint(samples, dictionary, cfg, segment_refs=list(refs)).codes
    else:
        result.codes = [comp_single(x, dictionary, cfg, segment_ref=ref)
                        for ref, x in zip(refs, samples)]

    result.finished_at = datetime_utcnow()

    logger.debug("Job #%s (group: %s) completed; %s atoms selected",
                 job_id, group_id, [len(code.support) for code in result.codes])

    return result
