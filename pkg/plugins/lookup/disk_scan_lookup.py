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

DOCUMENTATION = """
name: disk_scan_lookup
author:
  - DiSK collection contributors
version_added: "1.0.0"
short_description: List the scan ids of dataset splits
description:
  - This lookup reads the manifest of a dataset folder written by the
    disk_synth_data module and returns the scan ids of the requested splits
    in manifest order, so that disk_predict or disk_render can loop over them
options:
  _terms:
    description: Names of the splits, any of train, val and test
    required: True
  data:
    description: Dataset folder that contains manifest.json
    type: path
    required: True
"""

EXAMPLES = """
- name: Show the test scans
  ansible.builtin.debug:
    msg: "{{ lookup('kspace.disk_seg.disk_scan_lookup', 'test', data='/srv/disk/data') }}"

- name: Validation and test scans in one list
  ansible.builtin.debug:
    msg: "{{ lookup('kspace.disk_seg.disk_scan_lookup', 'val', 'test', data='/srv/disk/data', wantlist=True) }}"
"""

RETURN = """
_list:
  description:
    - Scan ids of the requested splits
  type: list
"""

import json
import os

from ansible.utils.display import Display
from ansible.plugins.lookup import LookupBase
from ansible.errors import AnsibleError

display = Display()

MANIFEST_NAME = "manifest.json"
SPLIT_NAMES = ["train", "val", "test"]


def read_manifest(folder):
    # type: (str) -> dict
    """Load the dataset manifest of a folder"""
    path = os.path.join(folder, MANIFEST_NAME)
    if not os.path.isfile(path):
        raise AnsibleError(f"Dataset manifest {path} not found")

    display.vvv(f"Reading dataset manifest {path}...")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except ValueError as err:
        raise AnsibleError(f"Dataset manifest {path} is not valid JSON: {err}")


class LookupModule(LookupBase):
    """Dataset split lookup module"""
    def run(self, terms, variables=None, **kwargs):

        # make sure that there is at least one split and that all are known
        if len(terms) == 0:
            raise AnsibleError("Split name not provided")

        for term in terms:
            if term not in SPLIT_NAMES:
                raise AnsibleError(f"Unknown split {term}, expected one of {SPLIT_NAMES}")

        data = kwargs.get("data")
        if data is None:
            raise AnsibleError("Dataset folder not provided, set the data option")

        manifest = read_manifest(os.path.expanduser(data))
        splits = manifest.get("splits", {})

        ret = []
        for term in terms:
            if term not in splits:
                raise AnsibleError(f"Split {term} not found in the manifest of {data}")

            display.vvv(f"Split {term} has {len(splits[term])} scans")
            ret.extend(splits[term])

        return ret
