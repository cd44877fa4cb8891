import os
import shutil
import sys

# The in-tree test run points at the built extension and the source package;
# an installed wheel needs neither variable.
ext_dir = os.environ.get("TOOLVISOR_EXT_DIR")
source_dir = os.environ.get("TOOLVISOR_SOURCE_DIR")
if ext_dir and source_dir:
    staged = os.path.join(ext_dir, "_staged_pkg")
    pkg = os.path.join(staged, "toolvisor")
    os.makedirs(pkg, exist_ok=True)
    shutil.copy(os.path.join(source_dir, "python", "toolvisor", "__init__.py"), pkg)
    for name in os.listdir(ext_dir):
        if name.startswith("_core") and (name.endswith(".so") or name.endswith(".pyd")):
            shutil.copy(os.path.join(ext_dir, name), pkg)
    data_src = os.path.join(source_dir, "data")
    data_dst = os.path.join(pkg, "data")
    if os.path.isdir(data_dst):
        shutil.rmtree(data_dst)
    shutil.copytree(data_src, data_dst)
    sys.path.insert(0, staged)
