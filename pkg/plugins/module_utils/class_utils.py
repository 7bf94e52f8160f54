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

import numpy as np

__all__ = [
    "to_dict",
]


def to_dict(src):
    # type: (any) -> any
    """Returns an object as JSON-serializable module output"""

    # convert numpy scalars and arrays
    if isinstance(src, np.generic):
        return src.item()
    if isinstance(src, np.ndarray):
        return src.tolist()

    if isinstance(src, (list, tuple)):
        return [to_dict(i) for i in src]

    if isinstance(src, dict):
        return {str(key): to_dict(value) for key, value in src.items()}

    if not hasattr(src, '__dict__'):
        return src

    result = {}
    fields = src.__dict__
    type_name = type(src).__name__

    for key in fields:

        # cleanup the key
        clean_key = key.replace(f'_{type_name}__', '')
        result[clean_key] = to_dict(fields[key])

    return result
