"""Configure Django for pytest, as manage.py does for the test runner."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'shrinkage_lab.settings')
django.setup()
