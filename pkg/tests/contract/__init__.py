# Empty file to make contract a package
