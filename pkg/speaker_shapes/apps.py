from django.apps import AppConfig


class SpeakerShapesConfig(AppConfig):
    name = 'speaker_shapes'
    verbose_name = 'Speaker shapes'
