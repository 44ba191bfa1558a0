# QIREN source package
