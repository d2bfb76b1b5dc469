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


class BaseError(Exception):
    """Base class for gaborcomp exceptions.

    Derived classes can overwrite the error message declaring ``message``
    property.
    """
    message = "gaborcomp base error"

    def __init__(self, **kwargs):
        super().__init__()
        self.msg = self.message % kwargs

    def __str__(self):
        return self.msg


class InvalidSegmentError(BaseError):
    """Exception raised when a segment cannot be processed"""

    message = "invalid segment; %(cause)s"


class InvalidLabelError(BaseError):
    """Exception raised when a class or location label is unknown"""

    message = "invalid label '%(label)s'"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.label = kwargs['label']


class IoError(BaseError):
    """Exception raised when a file referenced by a manifest row is missing"""

    message = "row %(row)s: cannot read '%(path)s'"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.row = kwargs['row']
        self.path = kwargs['path']


class DecodeError(BaseError):
    """Exception raised when a segment file cannot be decoded"""

    message = "cannot decode '%(path)s'; %(cause)s"


class InvalidSpecError(BaseError):
    """Exception raised when a synthetic dataset spec is not valid"""

    message = "invalid synthetic spec; %(cause)s"


class InvalidAtomParamsError(BaseError):
    """Exception raised when Gabor atom parameters are out of range"""

    message = "invalid atom parameters; %(cause)s"


class InvalidResolutionError(BaseError):
    """Exception raised when a resolution or a dictionary size is not valid"""

    message = "%(cause)s"


class DimError(BaseError):
    """Exception raised when array dimensions do not match"""

    message = "dimension mismatch; %(cause)s"


class EmptyInputError(BaseError):
    """Exception raised when an operation receives no data"""

    message = "empty input; %(cause)s"


class NumericalError(BaseError):
    """Exception raised when non-finite values appear"""

    message = "non-finite values found at stage '%(stage)s'"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.stage = kwargs['stage']


class DegenerateDatasetError(BaseError):
    """Exception raised when a dataset cannot be used for training"""

    message = "degenerate dataset; %(cause)s"


class InvalidKError(BaseError):
    """Exception raised when the number of folds is not valid"""

    message = "number of folds must be at least 2; %(k)s given"


class FormatError(BaseError):
    """Exception raised when an artifact header is not valid"""

    message = "%(artifact)s: %(cause)s"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.artifact = kwargs['artifact']


class NotFoundError(BaseError):
    """Exception raised when an element is not found"""

    message = "%(element)s not found"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.element = kwargs['element']


class PursuitJobError(BaseError):
    """Exception raised when a pursuit job fails"""

    message = "pursuit job %(job_id)s failed; %(cause)s"

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.job_id = kwargs['job_id']
