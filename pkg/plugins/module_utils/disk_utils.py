# -*- coding: utf-8 -*-

#
# Copyright (C) 2024 DiSK collection contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

from __future__ import (absolute_import, division, print_function)
__metaclass__ = type

import platform
import re
import sys
from ansible.module_utils.basic import (
    missing_required_lib,
)

__all__ = [
    'DiskError',
    'DiskConfigError',
    'DiskDataError',
    'DiskNumericalError',
    'DiskShapeError',
    'validate_numerics',
    'is_version_compatible',
    'fail_module',
]

RE_VERSION = "^([0-9]+)[.]([0-9]+)[.]([0-9]+)"
RE_VERSION_OK = r"^[*]|(([*]|[0-9]+|\[[0-9]+-[0-9]+\])([.]([*]|[0-9]+|\[[0-9]+-[0-9]+\])){1,2})$"

# numerical stack versions the collection is tested against
COMPATIBLE_NUMPY_VERSIONS = [
    "1.*.*",
    "2.*.*",
]


class DiskError(Exception):
    """Base class for all errors raised by the DiSK collection"""
    rc = 1

    def __init__(self, msg, details=None):
        # type: (str, dict) -> None
        super(DiskError, self).__init__(msg)
        self.details = details or {}


class DiskConfigError(DiskError, ValueError):
    """Invalid run configuration or parameter"""
    rc = 2


class DiskDataError(DiskError):
    """Missing, empty or inconsistent input data"""
    rc = 3


class DiskNumericalError(DiskError, ArithmeticError):
    """A computation produced a non-finite value"""
    rc = 4


class DiskShapeError(DiskError, ValueError):
    """Tensor dimensions do not agree"""
    rc = 3


def fail_module(module, err, **result):
    # type: (AnsibleModule, Exception, any) -> None
    """Report an exception through the module with the matching return code"""
    rc = getattr(err, 'rc', 1)
    details = getattr(err, 'details', None)
    module.fail_json(
        msg=str(err),
        rc=rc,
        error_class=type(err).__name__,
        error_details=details or {},
        **result
    )


def validate_numerics(module, version=None, import_error=None, ok_versions=None):
    # type: (AnsibleModule, str, str, List[str]) -> None
    """Checks if the loaded numpy library is usable by a module"""

    # if the version is not provided, that means that numpy or one
    # of the other numerical libraries could not be loaded
    if version is None:
        module.fail_json(
            msg=missing_required_lib("numpy, scipy and matplotlib"),
            error_details=str(import_error),
            error_class=type(import_error).__name__,
            rc=1,
        )
        return

    clean_version = version.strip()

    if ok_versions is None:
        ok_versions = COMPATIBLE_NUMPY_VERSIONS

    if not is_version_compatible(clean_version, ok_versions):
        module.fail_json(
            msg=incompatible_numpy(clean_version, ok_versions),
            error_details=f"Compatible versions are {ok_versions}",
            rc=1,
        )


def incompatible_numpy(version, ok_versions):
    # type: (str, List[str]) -> str

    hostname = platform.node()
    executable = sys.executable
    ok_versions_str = ", ".join(ok_versions)
    return (
        f"Installed numpy version ({version}) on {hostname}'s Python {executable} "
        "is incompatible with this module. The module requires one of the following "
        f"versions of numpy installed: {ok_versions_str}. "
        "If the required version is installed, but Ansible is using the wrong Python "
        "interpreter, please consult the documentation on ansible_python_interpreter"
    )


def is_version_compatible(version, ok_versions):
    # type: (str, List[str]) -> bool
    """Checks a version string against a list of version patterns"""

    # make sure that version has the right format. Trailing build tags
    # like '1.26.4rc1' are accepted.
    version_check = re.compile(RE_VERSION)
    version_match = version_check.match(version)

    if version_match is None:
        raise ValueError(f'Provided version "{version}" is not valid')

    clean_version = version_match.group(0)

    ok_version_check = re.compile(RE_VERSION_OK)

    # ok_versions is a list of patterns that describe the supported
    # versions. For example: 1.0.* matches with all of 1.0.1, 1.0.2, ...
    # 1.0.10. Whereas 1.0.[1-2] only matches with 1.0.1 and 1.0.2.
    for supported_version in ok_versions:
        ok_version_match = ok_version_check.match(supported_version)
        if ok_version_match is None:
            raise ValueError(f'provided version pattern "{supported_version}" is not valid')

        regex_string = supported_version.replace('.', '[.]')
        regex_string = regex_string.replace('*', '([^.]+)')

        match_result = re.fullmatch(regex_string, clean_version)

        if match_result:
            return True

    return False
