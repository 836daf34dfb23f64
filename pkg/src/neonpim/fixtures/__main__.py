from . import write_fixtures

for path in write_fixtures():
    print(path)
