import os


def pytest_configure(config):
    expected = os.environ.get("MCSFF_EXPECT_MODULE_DIR")
    if expected:
        import mcsff._core

        actual = os.path.realpath(mcsff._core.__file__)
        if not actual.startswith(os.path.realpath(expected)):
            raise RuntimeError(f"mcsff._core loaded from {actual}, expected under {expected}")
