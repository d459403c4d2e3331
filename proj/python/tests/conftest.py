import afc


def pytest_report_header(config):
    return f"afc module: {afc.__file__}"
