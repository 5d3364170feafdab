from django.db import models


class Run(models.Model):
    """One invocation of a lab command"""
    STATUS_CHOICES = [
        ('ok', 'OK'),
        ('failed', 'Checks failed'),
        ('rejected', 'Rejected input'),
    ]

    subcommand = models.CharField(max_length=20)
    config = models.TextField()  # resolved configuration as sorted JSON
    version = models.CharField(max_length=20)
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default='ok')
    exit_code = models.IntegerField(default=0)
    out_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.subcommand} run ({self.status})"
