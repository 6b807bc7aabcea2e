from hypothesis import settings

# root solves on a cold cache can exceed the default 200 ms deadline
settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")
