import hypothesis

hypothesis.settings.register_profile(
    "planarloc", deadline=None, print_blob=True
)
hypothesis.settings.load_profile("planarloc")
