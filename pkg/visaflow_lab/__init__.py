import os

# Local runs default to the dev settings; the test suite overrides this in pytest.ini
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "visaflow_lab.settings.dev")
