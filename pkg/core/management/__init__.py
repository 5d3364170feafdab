# Management commands package