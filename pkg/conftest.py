import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'haphazard_bench.settings')
django.setup()
