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
import concurrent.futures
import logging
import time

import rq
import rq.job

from .common import Q_PURSUIT_JOBS, TIMEOUT, WAIT_FOR_RESULTS
from .config import PursuitConfig
from .errors import PursuitJobError
from .jobs import execute_pursuit_job, generate_job_id
from .utils import max_threads


logger = logging.getLogger(__name__)


# Queued jobs wait for a worker as long as needed
INFINITE_TTL = -1
# Results are removed once collected; this bounds the life of
# results nobody collects
RESULT_TTL = 86400


PursuitGroup = collections.namedtuple('PursuitGroup', ['group_id', 'positions', 'refs', 'samples'])


def build_groups(segment_set, joint_by=None):
    """Split a segment set in pursuit groups.

    Without `joint_by`, every segment is a group on its own.
    Otherwise, segments sharing the value of the attribute
    `joint_by` form a group, in order of first appearance.
    """
    if joint_by is None:
        return [PursuitGroup(segment.ref, [i], [segment.ref], [segment.samples])
                for i, segment in enumerate(segment_set)]

    groups = []
    for key, positions in segment_set.groups(joint_by).items():
        segments = [segment_set[i] for i in positions]
        groups.append(PursuitGroup(key, positions,
                                   [s.ref for s in segments],
                                   [s.samples for s in segments]))
    return groups


class PursuitScheduler:
    """Run pursuit jobs on local threads or on rq workers.

    When `conn` is `None`, jobs run on a pool of threads whose size
    is capped by the environment variable `GABORCOMP_THREADS`.
    Otherwise, one job per group is enqueued on the queue `pursuit`
    of the Redis database and results are collected, and removed
    from the database, once workers finish them. Results are always returned in group order.

    Set `async_mode` to `False` to run the jobs of the queue in the
    same thread; this is useful for debugging purposes.

    :param dict_path: path to the dictionary file
    :param cfg: `PursuitConfig`
    :param conn: connection to the Redis database or `None`
    :param async_mode: run jobs on workers
    :param polling: sleep time between checks of the jobs status
    """
    def __init__(self, dict_path, cfg=None, conn=None, async_mode=True,
                 polling=WAIT_FOR_RESULTS):
        self.dict_path = dict_path
        self.cfg = cfg or PursuitConfig()
        self.conn = conn
        self.async_mode = async_mode
        self.polling = polling

    def run(self, groups, joint=False):
        """Decompose every group.

        :returns: list of `PursuitJobResult`, in the order of `groups`

        :raises PursuitJobError: when a queued job fails
        """
        if self.conn is None:
            return self._run_local(groups, joint)
        else:
            return self._run_queued(groups, joint)

    def decompose(self, segment_set, joint_by=None):
        """Decompose a segment set.

        :returns: list of `SparseCode`, in the order of the set
        """
        groups = build_groups(segment_set, joint_by)
        results = self.run(groups, joint=joint_by is not None)

        codes = [None] * len(segment_set)
        for group, result in zip(groups, results):
            for position, code in zip(group.positions, result.codes):
                codes[position] = code

        logger.info("%d segments decomposed in %d groups", len(codes), len(groups))

        return codes

    def _job_args(self, group, joint):
        return {
            'dict_path': self.dict_path,
            'group_id': group.group_id,
            'refs': list(group.refs),
            'samples': list(group.samples),
            'pursuit_cfg': self.cfg.to_dict(),
            'joint': joint
        }

    def _run_local(self, groups, joint):
        threads = min(max_threads(), max(len(groups), 1))

        logger.debug("Running %d pursuit jobs on %d threads", len(groups), threads)

        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(execute_pursuit_job, **self._job_args(group, joint))
                       for group in groups]
            return [future.result() for future in futures]

    def _run_queued(self, groups, joint):
        queue = rq.Queue(Q_PURSUIT_JOBS, connection=self.conn, is_async=self.async_mode)

        jobs = []
        for group in groups:
            job = queue.enqueue(execute_pursuit_job,
                                job_id=generate_job_id(group.group_id),
                                job_timeout=TIMEOUT,
                                ttl=INFINITE_TTL,
                                result_ttl=RESULT_TTL,
                                **self._job_args(group, joint))
            jobs.append(job)

            logger.debug("Job #%s (group: %s) enqueued in '%s'",
                         job.id, group.group_id, Q_PURSUIT_JOBS)

        results = [None] * len(jobs)
        pending = set(range(len(jobs)))

        while pending:
            for i in sorted(pending):
                job = rq.job.Job.fetch(jobs[i].id, connection=self.conn)
                status = job.get_status()

                if status == rq.job.JobStatus.FINISHED:
                    results[i] = job.result
                    job.delete()
                    pending.discard(i)
                elif status == rq.job.JobStatus.FAILED:
                    cause = (job.exc_info or 'unknown error').strip().splitlines()[-1]
                    raise PursuitJobError(job_id=job.id, cause=cause)
            if pending:
                time.sleep(self.polling)

        return results
