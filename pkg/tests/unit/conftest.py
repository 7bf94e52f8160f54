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

from __future__ import absolute_import, division, print_function
__metaclass__ = type

import os
import sys
import tempfile

# The tests import the collection by its fully qualified name. When the
# repository is not checked out below ansible_collections/kspace/disk_seg,
# expose it through a symlinked namespace tree.
try:
    import ansible_collections.kspace.disk_seg.plugins.module_utils.disk_utils  # noqa: F401

except ImportError:
    _root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    _base = tempfile.mkdtemp(prefix='disk_seg_collections_')
    _namespace = os.path.join(_base, 'ansible_collections', 'kspace')
    os.makedirs(_namespace)
    os.symlink(_root, os.path.join(_namespace, 'disk_seg'))
    sys.path.insert(0, _base)

    for _name in [n for n in sys.modules if n.startswith('ansible_collections')]:
        del sys.modules[_name]
