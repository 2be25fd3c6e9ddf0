"""
Capa de dominio - Contiene las entidades, los algoritmos numéricos y los eventos de dominio.
Esta capa NO debe depender de Django ni de ningún framework externo.
"""
