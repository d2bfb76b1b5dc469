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

import logging

import rq


JOB_LOGGERS = ['gaborcomp', 'rq']
logger = logging.getLogger(__name__)


class JobLogHandler(logging.StreamHandler):
    """Handler class for the job logs"""

    def __init__(self, job):
        logging.StreamHandler.__init__(self)
        self.job = job
        self.job.meta['log'] = []
        self.job.save_meta()

    def emit(self, record):
        log = {
            'created': record.created,
            'msg': self.format(record),
            'module': record.module,
            'level': record.levelname
        }
        self.job.meta['log'].append(log)
        self.job.save_meta()


class PursuitWorker(rq.Worker):
    """Worker class for pursuit jobs.

    Log records of the job are stored on the `log` entry of the
    job meta data while it runs.
    """
    def perform_job(self, job, queue, *args, **kwargs):
        """Execute a job storing its log records

        :param job: Job object
        :param queue: the queue containing the object
        """
        handler = self.setup_job_loghandlers(job)

        try:
            result = super().perform_job(job, queue, *args, **kwargs)
        finally:
            self.remove_job_loghandlers(handler)

        return result

    @staticmethod
    def setup_job_loghandlers(job):
        meta_handler = JobLogHandler(job)
        for logger_name in JOB_LOGGERS:
            logger_job = logging.getLogger(logger_name)
            logger_job.addHandler(meta_handler)
        return meta_handler

    @staticmethod
    def remove_job_loghandlers(handler):
        for logger_name in JOB_LOGGERS:
            logging.getLogger(logger_name).removeHandler(handler)
