"""GPR wall-scan inversion toolkit.

Submodules:
    radargram       scan containers, time axis, persistence
    synth           layered-wall forward model and scan renderer
    preprocess      gain and normalization
    svd_labeler     singular-vector stud labeling and width calibration
    baselines       KNN / decision tree / random forest from first principles
    feature_select  folds, agglomeration, permutation importance, RFECV
    sparsenn        L0-gated sparse network
    explain         Shapley attribution and time-to-depth mapping
    presets         canonical synthetic benchmark suite
    cli             command-line pipeline driver
"""

__version__ = "0.1.0"
