# Management commands