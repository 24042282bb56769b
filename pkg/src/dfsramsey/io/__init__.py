from .datasets import read_dataset, write_dataset
from .reports import (
    echo_config,
    package_versions,
    to_builtin,
    write_json,
    write_manifest,
    write_plot_data,
    write_table,
)

__all__ = [
    "echo_config",
    "package_versions",
    "read_dataset",
    "to_builtin",
    "write_dataset",
    "write_json",
    "write_manifest",
    "write_plot_data",
    "write_table",
]
